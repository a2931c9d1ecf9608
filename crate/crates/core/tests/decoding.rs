mod support;

use proptest::prelude::*;
use qs_core::decode::{decode_exhaustive, weighted_embedding, Heuristic};
use qs_core::{decode, decode_bruteforce, DecodeBudget, LossConfig, Observation, Subset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{label, oracle_argmin, permutation_losses, random_observation, subset_losses};

fn random_instance(loss: &qs_core::DiscreteLoss, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Observation>) {
    let n = rng.gen_range(1..=8);
    let ys: Vec<Observation> = (0..n).map(|_| random_observation(loss, rng)).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.0)).collect();
    (w, ys)
}

#[test]
fn fast_decoders_match_the_definition_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut losses = Vec::new();
    for m in 2..=5 {
        losses.extend(subset_losses(m));
    }
    for m in 2..=4 {
        losses.extend(permutation_losses(m, 2));
    }
    for loss in losses {
        for _ in 0..25 {
            let (w, ys) = random_instance(&loss, &mut rng);
            let theta = weighted_embedding(&loss, &w, &ys).unwrap();
            let fast = decode(&loss, &theta, &DecodeBudget::default()).unwrap();
            let want = oracle_argmin(&loss, &w, &ys);
            assert_eq!(fast, want, "{} w={w:?} ys={ys:?}", label(&loss));
            assert_eq!(decode_bruteforce(&loss, &w, &ys).unwrap(), want);
        }
    }
}

#[test]
fn zero_scores_give_the_canonical_first_label() {
    let mut losses = subset_losses(4);
    losses.extend(permutation_losses(4, 2));
    for loss in losses {
        let theta = vec![0.0; loss.r()];
        let z = decode(&loss, &theta, &DecodeBudget::default()).unwrap();
        assert_eq!(z, loss.enumerate_outputs().unwrap()[0], "{}", label(&loss));
    }
}

#[test]
fn heuristics_are_near_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["pd", "map"] {
        let loss = LossConfig::new(name, 7).build().unwrap();
        let budget = DecodeBudget {
            pd_exact_limit: 2,
            map_exact_limit: 2,
            heuristic: Heuristic::SwapLocalSearch,
            ..DecodeBudget::default()
        };
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let theta: Vec<f64> = (0..loss.r()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h = decode(&loss, &theta, &budget).unwrap();
            let e = decode_exhaustive(&loss, &theta).unwrap();
            let value = |z| qs_core::math::dot(&loss.f_row(z).unwrap(), &theta);
            let scale = theta.iter().map(|t| t.abs()).sum::<f64>();
            assert!(value(&h) >= value(&e) - 1e-12);
            worst = worst.max((value(&h) - value(&e)) / scale);
        }
        // local optima stay within a few percent of the global one
        assert!(worst < 0.05, "{name}: {worst}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamming_decoding_is_thresholding(theta in prop::collection::vec(-1.0f64..1.0, 1..12)) {
        let loss = LossConfig::new("hamming", theta.len()).build().unwrap();
        let z = decode(&loss, &theta, &DecodeBudget::default()).unwrap();
        let s = z.as_subset().unwrap();
        for (j, t) in theta.iter().enumerate() {
            prop_assert_eq!(s.contains(j), *t > 0.0);
        }
    }

    #[test]
    fn argmin_ignores_the_offset(
        seed in any::<u64>(),
        shift in -3.0f64..3.0,
        which in 0usize..10,
    ) {
        let mut losses = subset_losses(3);
        losses.extend(permutation_losses(3, 2));
        let loss = &losses[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, ys) = random_instance(loss, &mut rng);
        // shifting every loss value adds shift·Σw to each candidate alike
        let a = qs_core::decode::decode_bruteforce_with(loss, &w, &ys, |z, y| loss.eval(z, y).unwrap()).unwrap();
        let b = qs_core::decode::decode_bruteforce_with(loss, &w, &ys, |z, y| loss.eval(z, y).unwrap() + shift).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ndcg_decoding_sorts_scores(theta in prop::collection::vec(-1.0f64..1.0, 2..9)) {
        let loss = LossConfig::new("ndcg", theta.len()).build().unwrap();
        let z = decode(&loss, &theta, &DecodeBudget::default()).unwrap();
        let order = z.as_permutation().unwrap().order();
        for pair in order.windows(2) {
            prop_assert!(theta[pair[0]] >= theta[pair[1]]);
        }
    }

    #[test]
    fn prec_at_k_picks_k_items(theta in prop::collection::vec(-1.0f64..1.0, 2..10), k in 1usize..10) {
        let m = theta.len();
        let k = 1 + k % m;
        let loss = LossConfig::new("prec@k", m).with_k(k).build().unwrap();
        let z = decode(&loss, &theta, &DecodeBudget::default()).unwrap();
        let s: &Subset = z.as_subset().unwrap();
        prop_assert_eq!(s.count(), k);
        let lowest_in = s.ones().map(|j| theta[j]).fold(f64::INFINITY, f64::min);
        let highest_out = (0..m).filter(|&j| !s.contains(j)).map(|j| theta[j]).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lowest_in >= highest_out);
    }
}
