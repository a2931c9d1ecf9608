//! Inference `argmin_z F_z · θ` with per-loss fast algorithms, plus a
//! brute-force oracle over `Σ_i w_i L(z, y_i)`.
//!
//! All decoders share one tie-break: the smallest label in canonical order
//! (subsets by integer code, permutations lexicographically by rank vector).
//! Enumerating decoders treat values within a relative 1e-12 of the minimum
//! as tied; the closed-form decoders compare scores exactly.

mod ranking;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use ranking::{arcset_objective, greedy_arcset, qap_local_search, qap_objective};

use crate::error::{Error, Result};
use crate::label::{self, Observation, OutputLabel, Permutation, Subset};
use crate::losses::{
    fscore_index, pair_index_le, pair_index_lt, DiscreteLoss, FScoreSide, LossFamily,
    MAX_ENUM_PERMUTATION_M, MAX_ENUM_SUBSET_M,
};
use crate::matrix::Matrix;

/// Fallback for the NP-hard ranking losses once `m` exceeds the exact limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    /// Greedy feedback arc set for pd, swap local search for map.
    #[default]
    Auto,
    /// Greedy ordering refined by adjacent swaps (pd); map uses local search.
    GreedyArcset,
    /// Pairwise-swap local search from the greedy order (pd) or from restarts (map).
    SwapLocalSearch,
    /// Refuse to decode beyond the exact limit.
    Forbid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeBudget {
    /// Exact enumeration for pd while `m` is at most this.
    pub pd_exact_limit: usize,
    /// Exact enumeration for map while `m` is at most this.
    pub map_exact_limit: usize,
    pub heuristic: Heuristic,
    /// Local-search restarts for map (the first starts from the identity).
    pub restarts: usize,
    pub seed: u64,
}

impl Default for DecodeBudget {
    fn default() -> Self {
        Self {
            pd_exact_limit: 8,
            map_exact_limit: 6,
            heuristic: Heuristic::Auto,
            restarts: 8,
            seed: 0,
        }
    }
}

impl DecodeBudget {
    pub fn validate(&self) -> Result<()> {
        if self.pd_exact_limit < 2 || self.map_exact_limit < 2 {
            return Err(Error::invalid("exact decoding limits must be at least 2"));
        }
        if self.pd_exact_limit > MAX_ENUM_PERMUTATION_M + 2 || self.map_exact_limit > MAX_ENUM_PERMUTATION_M + 2 {
            return Err(Error::invalid("exact decoding limits above 10 are not supported"));
        }
        Ok(())
    }
}

/// `argmin_z F_z · θ` for the loss, with the canonical tie-break.
pub fn decode(loss: &DiscreteLoss, theta: &[f64], budget: &DecodeBudget) -> Result<OutputLabel> {
    if theta.len() != loss.r() {
        return Err(Error::DimensionMismatch {
            expected: loss.r(),
            found: theta.len(),
        });
    }
    let m = loss.m();
    Ok(match loss.family() {
        LossFamily::Hamming => {
            OutputLabel::Subset(Subset::new(theta.iter().map(|&t| t > 0.0).collect()))
        }
        LossFamily::ZeroOne => {
            let code = argmax_first(theta);
            OutputLabel::Subset(Subset::from_code(m, code as u64))
        }
        LossFamily::Block => {
            let first = loss.block_first_codes().expect("block loss");
            let mut best = 0;
            for b in 1..theta.len() {
                if theta[b] > theta[best] || (theta[b] == theta[best] && first[b] < first[best]) {
                    best = b;
                }
            }
            OutputLabel::Subset(Subset::from_code(m, first[best] as u64))
        }
        LossFamily::PrecAtK => {
            let k = loss.prec_k().expect("prec@k loss");
            OutputLabel::KSubset {
                bits: top_k(theta, k).0,
                k,
            }
        }
        LossFamily::FScore => OutputLabel::Subset(decode_fscore(
            m,
            theta,
            loss.fscore_side().expect("fscore loss"),
        )),
        LossFamily::NdcgType => {
            let (_, discount) = loss.ndcg_params().expect("ndcg loss");
            OutputLabel::Permutation(decode_ndcg(theta, discount))
        }
        LossFamily::PairwiseDisagreement => {
            OutputLabel::Permutation(decode_pd(m, theta, budget)?)
        }
        LossFamily::MeanAveragePrecision => {
            OutputLabel::Permutation(decode_map(m, theta, budget)?)
        }
    })
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Indices of the `k` largest scores, lower index first among equal scores,
/// together with their sum.
fn top_k(scores: &[f64], k: usize) -> (Subset, f64) {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // stable: equal scores keep ascending index order
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut bits = Subset::empty(scores.len());
    let mut chosen: Vec<usize> = idx[..k].to_vec();
    chosen.sort_unstable();
    let mut total = 0.0;
    for j in chosen {
        bits.set(j, true);
        total += scores[j];
    }
    (bits, total)
}

/// `A_{jk} = Σ_ℓ 2 θ_{jℓ} / (ℓ + k)` from the P-side scores.
pub fn fscore_a_matrix(m: usize, theta: &[f64]) -> Matrix {
    let mut a = Matrix::zeros(m, m);
    for j in 0..m {
        for k in 1..=m {
            let mut s = 0.0;
            for l in 1..=m {
                s += 2.0 * theta[fscore_index(m, j, l)] / (l + k) as f64;
            }
            a[(j, k - 1)] = s;
        }
    }
    a
}

fn decode_fscore(m: usize, theta: &[f64], side: FScoreSide) -> Subset {
    let a = match side {
        FScoreSide::P => fscore_a_matrix(m, theta),
        FScoreSide::A => {
            let mut a = Matrix::zeros(m, m);
            for j in 0..m {
                for k in 1..=m {
                    a[(j, k - 1)] = theta[fscore_index(m, j, k)];
                }
            }
            a
        }
    };
    // maximize the score; the empty set scores θ_extra and has the smallest code
    let mut best = Subset::empty(m);
    let mut best_score = theta[m * m];
    for k in 1..=m {
        let (z, score) = top_k(&a.column(k - 1), k);
        if score > best_score || (score == best_score && z < best) {
            best = z;
            best_score = score;
        }
    }
    best
}

fn decode_ndcg(theta: &[f64], discount: &[f64]) -> Permutation {
    let m = theta.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]));
    // positions with equal discount are interchangeable: give them to items in index order
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && discount[end] == discount[start] {
            end += 1;
        }
        order[start..end].sort_unstable();
        start = end;
    }
    Permutation::from_order(&order).expect("sorted indices form a permutation")
}

fn pd_objective(m: usize, ranks: &[usize], theta: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..m {
        for l in j + 1..m {
            let t = theta[pair_index_lt(m, j, l)];
            s += if ranks[j] < ranks[l] { 0.25 * t } else { -0.25 * t };
        }
    }
    s
}

fn map_objective(m: usize, ranks: &[usize], theta: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..m {
        for l in 0..=j {
            let pos = ranks[j].max(ranks[l]) + 1;
            s += theta[pair_index_le(j, l)] / pos as f64;
        }
    }
    s
}

fn enumerate_best(m: usize, objective: impl Fn(&[usize]) -> f64) -> Permutation {
    let mut ranks: Vec<usize> = (0..m).collect();
    let mut all = Vec::new();
    let mut values = Vec::new();
    loop {
        values.push(objective(&ranks));
        all.push(ranks.clone());
        if !label::next_permutation(&mut ranks) {
            break;
        }
    }
    let best = canonical_argmin(&values);
    Permutation::from_ranks(all.swap_remove(best)).expect("enumerated ranks")
}

/// Relative width of the band around the minimum inside which values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// First index (in canonical order) whose value is within [`TIE_TOLERANCE`]
/// of the minimum. Mathematically equal objectives summed in different orders
/// differ in the last bits; the band keeps the tie-break canonical.
pub fn canonical_argmin(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let cut = min + TIE_TOLERANCE * scale;
    values.iter().position(|&v| v <= cut).unwrap_or(0)
}

/// Pairwise-swap descent on a minimization objective over rank vectors.
fn swap_descent(ranks: &mut [usize], objective: &impl Fn(&[usize]) -> f64) -> f64 {
    let m = ranks.len();
    let mut current = objective(ranks);
    loop {
        let mut improved = false;
        for a in 0..m {
            for b in a + 1..m {
                ranks.swap(a, b);
                let v = objective(ranks);
                if v < current {
                    current = v;
                    improved = true;
                } else {
                    ranks.swap(a, b);
                }
            }
        }
        if !improved {
            return current;
        }
    }
}

/// Arc weights of the pd objective: `γ[j][ℓ]` is paid when `j` is ranked after `ℓ`.
pub fn pd_arc_weights(m: usize, theta: &[f64]) -> Matrix {
    let mut g = Matrix::zeros(m, m);
    for j in 0..m {
        for l in j + 1..m {
            let t = theta[pair_index_lt(m, j, l)];
            g[(j, l)] = 0.5 * (-t).max(0.0);
            g[(l, j)] = 0.5 * t.max(0.0);
        }
    }
    g
}

fn decode_pd(m: usize, theta: &[f64], budget: &DecodeBudget) -> Result<Permutation> {
    budget.validate()?;
    if m <= budget.pd_exact_limit {
        return Ok(enumerate_best(m, |r| pd_objective(m, r, theta)));
    }
    let greedy = greedy_arcset(&pd_arc_weights(m, theta));
    match budget.heuristic {
        Heuristic::Forbid => Err(Error::BudgetExceeded {
            m,
            limit: budget.pd_exact_limit,
        }),
        Heuristic::Auto | Heuristic::GreedyArcset => Ok(greedy),
        Heuristic::SwapLocalSearch => {
            let mut ranks = greedy.ranks().to_vec();
            swap_descent(&mut ranks, &|r: &[usize]| pd_objective(m, r, theta));
            Ok(Permutation::from_ranks(ranks).expect("swaps keep a permutation"))
        }
    }
}

/// The map decoding problem as `max_σ Σ_{jℓ} W_{jℓ} D_{σ(j)σ(ℓ)}`.
pub fn map_qap_instance(m: usize, theta: &[f64]) -> (Matrix, Matrix) {
    let mut w = Matrix::zeros(m, m);
    let mut d = Matrix::zeros(m, m);
    for j in 0..m {
        for l in 0..=j {
            w[(j, l)] = -theta[pair_index_le(j, l)];
        }
        for p in 0..m {
            d[(j, p)] = 1.0 / (j.max(p) + 1) as f64;
        }
    }
    (w, d)
}

fn decode_map(m: usize, theta: &[f64], budget: &DecodeBudget) -> Result<Permutation> {
    budget.validate()?;
    if m <= budget.map_exact_limit {
        return Ok(enumerate_best(m, |r| map_objective(m, r, theta)));
    }
    if budget.heuristic == Heuristic::Forbid {
        return Err(Error::BudgetExceeded {
            m,
            limit: budget.map_exact_limit,
        });
    }
    let (w, d) = map_qap_instance(m, theta);
    Ok(qap_local_search(&w, &d, budget.restarts.max(1), budget.seed))
}

/// `argmin_z F_z · θ` by enumerating `Z`; the oracle for [`decode`].
pub fn decode_exhaustive(loss: &DiscreteLoss, theta: &[f64]) -> Result<OutputLabel> {
    if theta.len() != loss.r() {
        return Err(Error::DimensionMismatch {
            expected: loss.r(),
            found: theta.len(),
        });
    }
    let outputs = loss.enumerate_outputs()?;
    let values: Vec<f64> = outputs
        .iter()
        .map(|z| crate::math::dot(&loss.f_row_unchecked(z), theta))
        .collect();
    let best = canonical_argmin(&values);
    Ok(outputs.into_iter().nth(best).expect("nonempty output space"))
}

/// Exact minimizer of `Σ_i w_i L(z, y_i)` over an enumerable `Z`.
pub fn decode_bruteforce(
    loss: &DiscreteLoss,
    weights: &[f64],
    observations: &[Observation],
) -> Result<OutputLabel> {
    decode_bruteforce_with(loss, weights, observations, |z, y| loss.eval_unchecked(z, y))
}

/// As [`decode_bruteforce`], with a caller-supplied evaluator; used to check
/// invariance of the argmin under transformations of the loss.
pub fn decode_bruteforce_with(
    loss: &DiscreteLoss,
    weights: &[f64],
    observations: &[Observation],
    eval: impl Fn(&OutputLabel, &Observation) -> f64,
) -> Result<OutputLabel> {
    if weights.len() != observations.len() {
        return Err(Error::DimensionMismatch {
            expected: observations.len(),
            found: weights.len(),
        });
    }
    for (i, y) in observations.iter().enumerate() {
        loss.validate_observation(y).map_err(|e| match e {
            Error::InvalidLabel { reason, .. } => Error::InvalidLabel { index: Some(i), reason },
            other => other,
        })?;
    }
    let limit = match loss.output_space() {
        crate::losses::OutputSpace::Permutations => label::factorial(MAX_ENUM_PERMUTATION_M),
        _ => 1u128 << MAX_ENUM_SUBSET_M,
    };
    let outputs = loss.enumerate_outputs_within(limit)?;
    let values: Vec<f64> = outputs
        .iter()
        .map(|z| weights.iter().zip(observations).map(|(w, y)| w * eval(z, y)).sum())
        .collect();
    let best = canonical_argmin(&values);
    Ok(outputs.into_iter().nth(best).expect("nonempty output space"))
}

/// `Σ_i w_i U_{y_i}`.
pub fn weighted_embedding(
    loss: &DiscreteLoss,
    weights: &[f64],
    observations: &[Observation],
) -> Result<Vec<f64>> {
    if weights.len() != observations.len() {
        return Err(Error::DimensionMismatch {
            expected: observations.len(),
            found: weights.len(),
        });
    }
    let mut theta = vec![0.0; loss.r()];
    for (w, y) in weights.iter().zip(observations) {
        let u = loss.embed(y)?;
        for (t, v) in theta.iter_mut().zip(&u) {
            *t += w * v;
        }
    }
    Ok(theta)
}
