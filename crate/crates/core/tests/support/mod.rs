#![allow(dead_code)]

use qs_core::label::Subset;
use qs_core::losses::{FScoreSide, LossFamily};
use qs_core::{DiscreteLoss, LossConfig, Observation, OutputLabel};
use rand::Rng;

/// Partition of `{0,1}^m` by cardinality: block `s` holds the subsets of size `s`.
pub fn by_cardinality(m: usize) -> Vec<Vec<Vec<usize>>> {
    let mut blocks = vec![Vec::new(); m + 1];
    for code in 0u64..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|&j| code >> j & 1 == 1).collect();
        blocks[idx.len()].push(idx);
    }
    blocks
}

pub fn subset_losses(m: usize) -> Vec<DiscreteLoss> {
    vec![
        LossConfig::new("0-1", m).build().unwrap(),
        LossConfig::new("block", m).with_partition(by_cardinality(m)).build().unwrap(),
        LossConfig::new("hamming", m).build().unwrap(),
        LossConfig::new("prec@k", m).with_k(1.max(m / 2)).build().unwrap(),
        LossConfig::new("fscore", m).build().unwrap(),
        LossConfig::new("fscore", m).with_fscore_side(FScoreSide::A).build().unwrap(),
    ]
}

pub fn permutation_losses(m: usize, max_relevance: u32) -> Vec<DiscreteLoss> {
    vec![
        LossConfig::new("ndcg", m).with_max_relevance(max_relevance).build().unwrap(),
        LossConfig::new("eru", m).with_max_relevance(max_relevance).build().unwrap(),
        LossConfig::new("pd", m).build().unwrap(),
        LossConfig::new("map", m).build().unwrap(),
    ]
}

pub fn label(loss: &DiscreteLoss) -> String {
    format!("{}(m={})", loss.name(), loss.m())
}

fn bits(s: &Subset) -> Vec<bool> {
    s.bits().to_vec()
}

/// `L(z, y)` recomputed from the textbook definitions.
pub fn oracle_loss(loss: &DiscreteLoss, z: &OutputLabel, y: &Observation) -> f64 {
    let m = loss.m();
    match loss.family() {
        LossFamily::ZeroOne => {
            (bits(z.as_subset().unwrap()) != bits(y.as_subset().unwrap())) as u8 as f64
        }
        LossFamily::Block => {
            let partition = loss.config().partition.as_ref().unwrap();
            let block = |s: &Subset| {
                let idx: Vec<usize> = s.ones().collect();
                partition
                    .iter()
                    .position(|b| b.iter().any(|set| {
                        let mut set = set.clone();
                        set.sort_unstable();
                        set == idx
                    }))
                    .unwrap()
            };
            (block(z.as_subset().unwrap()) != block(y.as_subset().unwrap())) as u8 as f64
        }
        LossFamily::Hamming => {
            let (z, y) = (bits(z.as_subset().unwrap()), bits(y.as_subset().unwrap()));
            z.iter().zip(&y).filter(|(a, b)| a != b).count() as f64 / m as f64
        }
        LossFamily::PrecAtK => {
            let k = loss.prec_k().unwrap();
            let (z, y) = (bits(z.as_subset().unwrap()), bits(y.as_subset().unwrap()));
            let hit = z.iter().zip(&y).filter(|(a, b)| **a && **b).count();
            1.0 - hit as f64 / k as f64
        }
        LossFamily::FScore => {
            let (z, y) = (bits(z.as_subset().unwrap()), bits(y.as_subset().unwrap()));
            let nz = z.iter().filter(|&&b| b).count();
            let ny = y.iter().filter(|&&b| b).count();
            if nz + ny == 0 {
                return 0.0;
            }
            let hit = z.iter().zip(&y).filter(|(a, b)| **a && **b).count();
            1.0 - 2.0 * hit as f64 / (nz + ny) as f64
        }
        LossFamily::NdcgType => {
            let (gains, discount) = loss.ndcg_params().unwrap();
            let ranks = z.as_permutation().unwrap().ranks();
            let rel = y.as_relevance().unwrap();
            let dcg: f64 = (0..m).map(|j| gains[rel[j] as usize] * discount[ranks[j]]).sum();
            let mut g: Vec<f64> = rel.iter().map(|&t| gains[t as usize]).collect();
            g.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let best: f64 = g.iter().zip(discount).map(|(a, d)| a * d).sum();
            if best == 0.0 {
                0.0
            } else {
                1.0 - dcg / best
            }
        }
        LossFamily::PairwiseDisagreement => {
            let ranks = z.as_permutation().unwrap().ranks();
            let y = bits(y.as_subset().unwrap());
            let mut pairs = 0;
            let mut bad = 0;
            for j in 0..m {
                for l in 0..m {
                    if y[j] && !y[l] {
                        pairs += 1;
                        // relevant j placed below irrelevant l
                        if ranks[j] > ranks[l] {
                            bad += 1;
                        }
                    }
                }
            }
            if pairs == 0 {
                0.5
            } else {
                bad as f64 / pairs as f64
            }
        }
        LossFamily::MeanAveragePrecision => {
            let ranks = z.as_permutation().unwrap().ranks();
            let y = bits(y.as_subset().unwrap());
            let rel: Vec<usize> = (0..m).filter(|&j| y[j]).collect();
            if rel.is_empty() {
                return 0.0;
            }
            let ap: f64 = rel
                .iter()
                .map(|&j| {
                    let above = rel.iter().filter(|&&l| ranks[l] <= ranks[j]).count();
                    above as f64 / (ranks[j] + 1) as f64
                })
                .sum::<f64>()
                / rel.len() as f64;
            1.0 - ap
        }
    }
}

pub fn random_observation<R: Rng>(loss: &DiscreteLoss, rng: &mut R) -> Observation {
    let m = loss.m();
    match loss.family() {
        LossFamily::NdcgType => {
            let top = loss.config().max_relevance.unwrap_or(3);
            Observation::Relevance((0..m).map(|_| rng.gen_range(0..=top)).collect())
        }
        _ => Observation::Subset(Subset::new((0..m).map(|_| rng.gen_bool(0.4)).collect())),
    }
}

/// Independent argmin over `Z` in canonical order: the first label whose
/// weighted loss is within a relative 1e-12 of the minimum.
pub fn oracle_argmin(loss: &DiscreteLoss, w: &[f64], ys: &[Observation]) -> OutputLabel {
    let outputs = loss.enumerate_outputs().unwrap();
    let values: Vec<f64> = outputs
        .iter()
        .map(|z| w.iter().zip(ys).map(|(a, y)| a * oracle_loss(loss, z, y)).sum())
        .collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let i = values.iter().position(|&v| v <= min + 1e-12 * scale).unwrap();
    outputs[i].clone()
}
