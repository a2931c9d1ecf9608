use qs_core::label::subsets;
use qs_core::synth::{
    bayes_optimal, conditional_risk, excess_risk_exact, product_distribution, rate_experiment, MultilabelGenerator,
    NoiseMode, SyntheticSpec,
};
use qs_core::{LossConfig, OutputLabel, Subset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(noise: NoiseMode, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        d: 2,
        loss: LossConfig::new("hamming", 3),
        noise,
        seed,
        n_grid: vec![16, 32, 64],
        n_test: 50,
        replications: 2,
        n_probe: 100,
        bandwidth: None,
    }
}

#[test]
fn hard_margin_keeps_out_of_the_band() {
    let g = MultilabelGenerator::new(2, 4, NoiseMode::HardMargin { delta: 0.2 }, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..2000 {
        let x = g.sample_x(&mut rng);
        assert!(g.q(&x).iter().all(|q| (q - 0.5).abs() >= 0.2 - 1e-15));
    }
    let smooth = MultilabelGenerator::new(2, 4, NoiseMode::SmoothCrossing, 3);
    let mut near = false;
    for a in 0..200 {
        for b in 0..200 {
            let q = smooth.q(&[a as f64 / 199.0, b as f64 / 199.0]);
            near |= q.iter().any(|v| (v - 0.5).abs() < 0.01);
        }
    }
    assert!(near);
}

#[test]
fn hamming_bayes_matches_enumeration() {
    let q = [0.2, 0.7, 0.55, 0.4, 0.9];
    let losses = [
        LossConfig::new("hamming", 5).build().unwrap(),
        LossConfig::new("fscore", 5).build().unwrap(),
        LossConfig::new("prec@k", 5).with_k(2).build().unwrap(),
    ];
    for loss in losses {
        let name = loss.name().to_string();
        let pi = product_distribution(&q);
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let (z, risk) = bayes_optimal(&loss, &q).unwrap();
        // direct enumeration over both spaces
        let mut best = f64::INFINITY;
        for zc in loss.enumerate_outputs().unwrap() {
            let r: f64 = subsets(5)
                .zip(&pi)
                .map(|(y, p)| p * loss.eval(&zc, &y.into()).unwrap())
                .sum();
            best = best.min(r);
            assert!((conditional_risk(&loss, &zc, &q).unwrap() - r).abs() < 1e-12);
        }
        assert!((risk - best).abs() < 1e-12, "{name}");
        if name == "hamming" {
            assert_eq!(z, OutputLabel::Subset(Subset::parse_bit_string("01101").unwrap()));
        }
    }
}

#[test]
fn exact_excess_examples() {
    let loss = LossConfig::new("hamming", 2).build().unwrap();
    let probe = vec![vec![0.3, 0.8], vec![0.6, 0.1]];
    let bayes: Vec<OutputLabel> = probe.iter().map(|q| bayes_optimal(&loss, q).unwrap().0).collect();
    assert!(excess_risk_exact(&loss, &bayes, &probe).unwrap().abs() < 1e-12);
    // always predicting ∅: excess is Σ_j max(0, 2q_j − 1) / m averaged over probes
    let empty = vec![OutputLabel::Subset(Subset::empty(2)); 2];
    let want = ((0.6 / 2.0) + (0.2 / 2.0)) / 2.0;
    assert!((excess_risk_exact(&loss, &empty, &probe).unwrap() - want).abs() < 1e-12);
}

#[test]
fn experiments_are_reproducible() {
    let a = rate_experiment(&spec(NoiseMode::SmoothCrossing, 9)).unwrap();
    let b = rate_experiment(&spec(NoiseMode::SmoothCrossing, 9)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.len(), 6);
    assert!(a.records.iter().all(|r| r.excess_exact >= -1e-12));
}

#[test]
fn single_size_grid_has_no_slope() {
    let mut s = spec(NoiseMode::HardMargin { delta: 0.1 }, 1);
    s.n_grid = vec![32];
    let report = rate_experiment(&s).unwrap();
    assert!(report.slope.is_none());
    assert!(!report.notes.is_empty());
    s.n_grid.clear();
    assert!(rate_experiment(&s).is_err());
}

#[test]
fn test_estimate_tracks_exact_excess() {
    let mut s = spec(NoiseMode::SmoothCrossing, 4);
    s.n_test = 4000;
    s.n_probe = 4000;
    s.replications = 1;
    let report = rate_experiment(&s).unwrap();
    for r in &report.records {
        let t = r.excess_test.unwrap();
        // per-example losses lie in [−1, 1]
        assert!((t - r.excess_exact).abs() <= 3.0 * 2.0 / (4000f64).sqrt(), "{r:?}");
    }
}
