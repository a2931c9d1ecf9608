mod support;

use qs_core::theory::{
    calibration_dominance_rhs, calibration_h, calibration_h_p, comparison_check, tsybakov_check, FiniteProblem,
};
use qs_core::{decode, DecodeBudget, LossConfig, OutputLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{label, oracle_loss, permutation_losses, subset_losses};

fn small_losses() -> Vec<qs_core::DiscreteLoss> {
    let mut v = subset_losses(3);
    v.extend(permutation_losses(3, 2));
    v
}

/// Bayes predictor recomputed from the definitions: first minimizer within 1e-12.
fn oracle_bayes(p: &FiniteProblem, state: usize) -> OutputLabel {
    let loss = p.loss();
    let risks: Vec<f64> = p
        .outputs()
        .iter()
        .map(|z| {
            p.observations()
                .iter()
                .zip(p.conditional(state))
                .map(|(y, pr)| pr * oracle_loss(loss, z, y))
                .sum()
        })
        .collect();
    let min = risks.iter().cloned().fold(f64::INFINITY, f64::min);
    let cut = min + 1e-12 * risks.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    p.outputs()[risks.iter().position(|&v| v <= cut).unwrap()].clone()
}

#[test]
fn fisher_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for loss in small_losses() {
        for _ in 0..20 {
            let p = FiniteProblem::random(&loss, 3, &mut rng).unwrap();
            for s in 0..p.states() {
                let want = oracle_bayes(&p, s);
                assert_eq!(p.bayes_predictor(s), want, "{}", label(&loss));
                let z = decode(&loss, &p.g_star(s), &DecodeBudget::default()).unwrap();
                assert_eq!(z, want, "{} state {s}", label(&loss));
            }
        }
    }
}

#[test]
fn comparison_inequalities_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for loss in small_losses() {
        for _ in 0..50 {
            let p = FiniteProblem::random(&loss, 4, &mut rng).unwrap();
            let scale = rng.gen_range(0.01..1.0);
            let g: Vec<Vec<f64>> = (0..p.states())
                .map(|s| p.g_star(s).iter().map(|v| v + scale * rng.gen_range(-1.0..1.0)).collect())
                .collect();
            for q in [0.5, 1.0, 2.0] {
                let rec = comparison_check(&p, &g, q, &DecodeBudget::default()).unwrap();
                assert!(rec.holds_basic, "{} {rec:?}", label(&loss));
                assert!(rec.holds_improved.unwrap_or(true), "{} p={q} {rec:?}", label(&loss));
            }
        }
    }
}

#[test]
fn tsybakov_lemma_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for loss in small_losses() {
        for _ in 0..50 {
            let p = FiniteProblem::random(&loss, 5, &mut rng).unwrap();
            let f: Vec<OutputLabel> = (0..p.states())
                .map(|_| p.outputs()[rng.gen_range(0..p.outputs().len())].clone())
                .collect();
            for q in [0.5, 1.0, 2.0] {
                match tsybakov_check(&p, &f, q) {
                    Ok(rec) => assert!(rec.holds, "{} {rec:?}", label(&loss)),
                    Err(qs_core::Error::ZeroMargin { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
}

#[test]
fn bayes_predictor_has_zero_excess() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let loss = LossConfig::new("fscore", 3).build().unwrap();
    let p = FiniteProblem::random(&loss, 6, &mut rng).unwrap();
    let f: Vec<OutputLabel> = (0..p.states()).map(|s| p.bayes_predictor(s)).collect();
    assert_eq!(p.excess_risk(&f).unwrap(), 0.0);
    assert_eq!(p.error_mass(&f).unwrap(), 0.0);
}

#[test]
fn calibration_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let f = rng.gen_range(0.1..3.0);
        let eps: f64 = rng.gen_range(1e-4..1.0);
        let p: f64 = rng.gen_range(0.1..4.0);
        let gp: f64 = rng.gen_range(1.0..50.0);
        assert!((calibration_h(f, eps) - eps * eps / (4.0 * f * f)).abs() <= 1e-15);
        // both sides reduce to a common factor times ε^{(p+2)/(p+1)} and ε² respectively
        let common = gp.powf(-1.0 / (p + 1.0)) / (16.0 * f * f);
        let lhs = calibration_h_p(f, eps, p, gp);
        let rhs = calibration_dominance_rhs(f, eps, p, gp);
        assert!((lhs - common * eps.powf((p + 2.0) / (p + 1.0))).abs() <= 1e-12 * lhs);
        assert!((rhs - common * eps * eps).abs() <= 1e-12 * rhs);
        assert!(lhs >= rhs * (1.0 - 1e-12));
    }
}
