mod support;

use qs_core::losses::{decomposition_check, LossFamily};
use qs_core::math::dot;
use support::{label, oracle_loss, permutation_losses, subset_losses};

fn all_losses() -> Vec<qs_core::DiscreteLoss> {
    let mut v = subset_losses(4);
    v.extend(subset_losses(5));
    v.extend(permutation_losses(4, 2));
    v.push(qs_core::LossConfig::new("ndcg", 3).with_max_relevance(3).build().unwrap());
    v
}

#[test]
fn evaluator_matches_definitions() {
    for loss in all_losses() {
        let zs = loss.enumerate_outputs().unwrap();
        let ys = loss.enumerate_observations().unwrap();
        for z in &zs {
            for y in &ys {
                let want = oracle_loss(&loss, z, y);
                let got = loss.eval(z, y).unwrap();
                assert!((got - want).abs() <= 1e-12, "{} z={z} y={y:?}: {got} vs {want}", label(&loss));
                assert!((-1e-12..=1.0 + 1e-12).contains(&got), "{} out of range", label(&loss));
            }
        }
    }
}

#[test]
fn affine_identity_against_definitions() {
    for loss in all_losses() {
        let zs = loss.enumerate_outputs().unwrap();
        let ys = loss.enumerate_observations().unwrap();
        let us: Vec<Vec<f64>> = ys.iter().map(|y| loss.embed(y).unwrap()).collect();
        let mut worst: f64 = 0.0;
        for z in &zs {
            let f = loss.f_row(z).unwrap();
            assert_eq!(f.len(), loss.r());
            for (y, u) in ys.iter().zip(&us) {
                worst = worst.max((dot(&f, u) + loss.c() - oracle_loss(&loss, z, y)).abs());
            }
        }
        assert!(worst <= 1e-12, "{}: {worst}", label(&loss));
        assert!(decomposition_check(&loss).unwrap() <= 1e-12);
    }
}

#[test]
fn ideal_prediction_has_zero_loss() {
    for loss in all_losses() {
        for y in loss.enumerate_observations().unwrap() {
            // pd has no preference information when every item shares one label
            if loss.family() == LossFamily::PairwiseDisagreement {
                let k = y.as_subset().unwrap().count();
                if k == 0 || k == loss.m() {
                    continue;
                }
            }
            if let Some(z) = loss.ideal_prediction(&y) {
                assert!(oracle_loss(&loss, &z, &y).abs() <= 1e-12, "{} y={y:?}", label(&loss));
            }
        }
    }
}

#[test]
fn corrupted_offset_is_detected() {
    let loss = qs_core::LossConfig::new("hamming", 4).build().unwrap();
    let bad = loss.with_offset_error(1e-6);
    let err = decomposition_check(&bad).unwrap();
    assert!((err - 1e-6).abs() < 1e-12);
}

#[test]
fn oversized_spaces_are_refused() {
    let loss = qs_core::LossConfig::new("hamming", 30).build().unwrap();
    assert!(matches!(decomposition_check(&loss), Err(qs_core::Error::SpaceTooLarge { .. })));
    let loss = qs_core::LossConfig::new("pd", 12).build().unwrap();
    assert!(decomposition_check(&loss).is_err());
}
