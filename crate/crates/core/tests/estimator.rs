mod support;

use qs_core::kernel::{build_gram, eval_kernel};
use qs_core::{DecodeBudget, KernelSpec, LossConfig, Matrix, Observation, QsModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{label, permutation_losses, random_observation, subset_losses};

fn sample(loss: &qs_core::DiscreteLoss, n: usize, d: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<Observation>) {
    let x = (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
    let y = (0..n).map(|_| random_observation(loss, rng)).collect();
    (x, y)
}

#[test]
fn coefficient_and_weight_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut losses = subset_losses(4);
    losses.extend(permutation_losses(4, 2));
    for loss in losses {
        let (x, y) = sample(&loss, 25, 2, &mut rng);
        let model = QsModel::fit(&loss, KernelSpec::Gaussian { bandwidth: 0.4 }, 0.05, &x, &y).unwrap();
        for _ in 0..10 {
            let xq: Vec<f64> = (0..2).map(|_| rng.gen::<f64>()).collect();
            let g1 = model.g_hat(&xq).unwrap();
            let g2 = model.g_hat_from_alpha(&xq).unwrap();
            let gap = g1.iter().zip(&g2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap < 1e-10, "{}: {gap}", label(&loss));
            assert_eq!(
                model.predict(&xq, &DecodeBudget::default()).unwrap(),
                model.predict_alpha(&xq).unwrap(),
                "{}",
                label(&loss)
            );
        }
    }
}

#[test]
fn alpha_solves_the_regularized_system() {
    // direct oracle: form K + nλI densely and check (K + nλI) α = K_x
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let loss = LossConfig::new("hamming", 3).build().unwrap();
    let (x, y) = sample(&loss, 15, 3, &mut rng);
    let kernel = KernelSpec::Gaussian { bandwidth: 0.7 };
    let lambda = 0.02;
    let model = QsModel::fit(&loss, kernel, lambda, &x, &y).unwrap();
    let gram = build_gram(&kernel, &x).unwrap();
    let n = x.len();
    let xq = vec![0.3, 0.6, 0.1];
    let alpha = model.alpha(&xq).unwrap();
    let k: &Matrix = gram.matrix();
    for i in 0..n {
        let mut lhs = n as f64 * lambda * alpha[i];
        for j in 0..n {
            lhs += k[(i, j)] * alpha[j];
        }
        let rhs = eval_kernel(&kernel, &x[i], &xq).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn small_lambda_interpolates_training_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let loss = LossConfig::new("hamming", 4).build().unwrap();
    let (x, y) = sample(&loss, 30, 2, &mut rng);
    let model = QsModel::fit(&loss, KernelSpec::Gaussian { bandwidth: 0.1 }, 1e-8, &x, &y).unwrap();
    let risk = qs_core::estimator::model_risk(&model, &x, &y, &DecodeBudget::default()).unwrap();
    assert!(risk < 1e-12, "{risk}");
}

#[test]
fn separable_labels_are_learned() {
    // label j is on exactly when x_j > 1/2
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draw = |rng: &mut ChaCha8Rng, n: usize| {
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let y: Vec<Observation> = x
            .iter()
            .map(|p| Observation::Subset(qs_core::Subset::new(p.iter().map(|&v| v > 0.5).collect())))
            .collect();
        (x, y)
    };
    let (x, y) = draw(&mut rng, 400);
    let (xt, yt) = draw(&mut rng, 200);
    let loss = LossConfig::new("hamming", 2).build().unwrap();
    let model = QsModel::fit(&loss, KernelSpec::Gaussian { bandwidth: 0.2 }, 1e-3, &x, &y).unwrap();
    let risk = qs_core::estimator::model_risk(&model, &xt, &yt, &DecodeBudget::default()).unwrap();
    assert!(risk <= 0.05, "{risk}");
}

#[test]
fn rebuilt_model_predicts_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let loss = LossConfig::new("fscore", 3).build().unwrap();
    let (x, y) = sample(&loss, 20, 2, &mut rng);
    let kernel = KernelSpec::Gaussian { bandwidth: 0.5 };
    let model = QsModel::fit(&loss, kernel, 0.1, &x, &y).unwrap();
    let copy = QsModel::from_parts(
        &loss,
        kernel,
        0.1,
        x.clone(),
        y.clone(),
        model.active_columns().to_vec(),
        model.coefficients().clone(),
    )
    .unwrap();
    for xi in &x {
        assert_eq!(copy.g_hat(xi).unwrap(), model.g_hat(xi).unwrap());
        assert_eq!(copy.predict_alpha(xi).unwrap(), model.predict_alpha(xi).unwrap());
    }
}
