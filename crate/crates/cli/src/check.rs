//! Self-checks run by `qs check`: the affine decomposition over the full
//! spaces and agreement of the fast decoder with the brute-force argmin.

use qs_core::decode::weighted_embedding;
use qs_core::losses::{decomposition_check, LossFamily};
use qs_core::synth::derive_rng;
use qs_core::{decode, decode_bruteforce, DecodeBudget, DiscreteLoss, Observation, Subset};
use rand::Rng;
use serde::Serialize;

/// Largest decomposition error accepted as exact.
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub loss: String,
    pub m: usize,
    pub decomposition_error: f64,
    pub instances: usize,
    pub mismatches: usize,
    pub passed: bool,
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

/// `instances` random weighted samples; each has 1 to 8 observations with
/// weights in `[-0.5, 1)`, mimicking ridge weights that can be negative.
pub fn decoder_mismatches(loss: &DiscreteLoss, instances: usize, seed: u64, budget: &DecodeBudget) -> qs_core::Result<usize> {
    let mut rng = derive_rng(seed, 0x636865636b, loss.m() as u64);
    let mut bad = 0;
    for _ in 0..instances {
        let n = rng.gen_range(1..=8);
        let ys: Vec<Observation> = (0..n).map(|_| random_observation(loss, &mut rng)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.0)).collect();
        let theta = weighted_embedding(loss, &w, &ys)?;
        if decode(loss, &theta, budget)? != decode_bruteforce(loss, &w, &ys)? {
            bad += 1;
        }
    }
    Ok(bad)
}

pub fn check_loss(loss: &DiscreteLoss, instances: usize, seed: u64, budget: &DecodeBudget) -> qs_core::Result<CheckRow> {
    let decomposition_error = decomposition_check(loss)?;
    let mismatches = decoder_mismatches(loss, instances, seed, budget)?;
    Ok(CheckRow {
        loss: loss.name().to_string(),
        m: loss.m(),
        decomposition_error,
        instances,
        mismatches,
        passed: decomposition_error <= DECOMPOSITION_TOLERANCE && mismatches == 0,
    })
}
