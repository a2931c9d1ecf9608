//! Fitting with a validated λ, multilabel metrics and the held-out protocol
//! (60/20/20 split, standardization from the training part).

use anyhow::{bail, Result};
use qs_core::estimator::empirical_risk;
use qs_core::kernel::{default_lambda, lambda_grid, median_bandwidth};
use qs_core::{DecodeBudget, DiscreteLoss, KernelSpec, LossConfig, Observation, OutputLabel, QsModel, Subset};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split, MultilabelDataset, Standardizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Gaussian,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaChoice {
    /// `n^{-1/2}`.
    #[default]
    Default,
    Fixed(f64),
    /// Chosen on validation data; an empty list means the default grid.
    Grid(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitOptions {
    pub kernel: KernelKind,
    /// Median heuristic on the training inputs when absent.
    pub bandwidth: Option<f64>,
    pub lambda: LambdaChoice,
    pub budget: DecodeBudget,
}

impl FitOptions {
    pub fn kernel_for(&self, x: &[Vec<f64>]) -> Result<KernelSpec> {
        Ok(match self.kernel {
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Gaussian => match self.bandwidth {
                Some(bw) => KernelSpec::gaussian(bw)?,
                None => KernelSpec::gaussian(median_bandwidth(x, 1000)?)?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub lambda: f64,
    pub risk: f64,
}

/// Fits at the chosen λ. A grid needs validation data; the smallest
/// validation risk wins, the larger λ on ties.
pub fn fit(
    loss: &DiscreteLoss,
    x: &[Vec<f64>],
    y: &[Observation],
    val: Option<(&[Vec<f64>], &[Observation])>,
    opts: &FitOptions,
) -> Result<(QsModel, Vec<ValidationPoint>)> {
    let kernel = opts.kernel_for(x)?;
    let n = x.len();
    let grid = match &opts.lambda {
        LambdaChoice::Default => return Ok((QsModel::fit(loss, kernel, default_lambda(n), x, y)?, Vec::new())),
        LambdaChoice::Fixed(l) => return Ok((QsModel::fit(loss, kernel, *l, x, y)?, Vec::new())),
        LambdaChoice::Grid(g) if g.is_empty() => lambda_grid(n),
        LambdaChoice::Grid(g) => g.clone(),
    };
    let Some((xv, yv)) = val else {
        bail!("a λ grid needs validation data");
    };
    let mut curve = Vec::with_capacity(grid.len());
    let mut best: Option<(QsModel, f64)> = None;
    for lambda in grid {
        let model = QsModel::fit(loss, kernel, lambda, x, y)?;
        let preds = predict_all(&model, xv, &opts.budget, false)?;
        let risk = empirical_risk(loss, &preds, yv)?;
        curve.push(ValidationPoint { lambda, risk });
        let better = match &best {
            None => true,
            // risks within 1e-12 tie; the larger λ wins a tie
            Some((m, r)) => risk < *r - 1e-12 || ((risk - *r).abs() <= 1e-12 && lambda > m.lambda()),
        };
        if better {
            best = Some((model, risk));
        }
    }
    Ok((best.expect("grid is nonempty").0, curve))
}

/// Predictions in input order; parallel over inputs.
pub fn predict_all(model: &QsModel, x: &[Vec<f64>], budget: &DecodeBudget, decompose_free: bool) -> Result<Vec<OutputLabel>> {
    let preds: qs_core::Result<Vec<OutputLabel>> = x
        .par_iter()
        .map(|xi| if decompose_free { model.predict_alpha(xi) } else { model.predict(xi, budget) })
        .collect();
    Ok(preds?)
}

/// 0-1 loss, Hamming loss and F1 score (higher is better; `∅` against `∅` scores 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub zero_one_loss: f64,
    pub hamming_loss: f64,
    pub f1_score: f64,
}

pub fn multilabel_metrics(pred: &[Subset], truth: &[Subset]) -> Result<Metrics> {
    if pred.len() != truth.len() {
        bail!("{} predictions for {} examples", pred.len(), truth.len());
    }
    if truth.is_empty() {
        bail!("no examples to evaluate");
    }
    let (mut zo, mut ham, mut f1) = (0.0, 0.0, 0.0);
    for (z, y) in pred.iter().zip(truth) {
        if z.m() != y.m() {
            bail!("prediction width {} does not match label width {}", z.m(), y.m());
        }
        zo += (z != y) as u8 as f64;
        ham += z.hamming_distance(y) as f64 / y.m().max(1) as f64;
        let denom = z.count() + y.count();
        f1 += if denom == 0 { 1.0 } else { 2.0 * z.intersection_count(y) as f64 / denom as f64 };
    }
    let n = truth.len() as f64;
    Ok(Metrics {
        zero_one_loss: zo / n,
        hamming_loss: ham / n,
        f1_score: f1 / n,
    })
}

/// Held-out evaluation: split, standardize on train, then one validated fit
/// per metric loss; each metric is read off its own loss's predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutReport {
    pub dataset: String,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub zero_one_loss: f64,
    pub hamming_loss: f64,
    pub f1_score: f64,
    pub lambdas: Vec<(String, f64)>,
}

pub struct Prepared {
    pub x_train: Vec<Vec<f64>>,
    pub y_train: Vec<Observation>,
    pub x_val: Vec<Vec<f64>>,
    pub y_val: Vec<Observation>,
    pub x_test: Vec<Vec<f64>>,
    pub y_test: Vec<Subset>,
    pub standardizer: Standardizer,
}

pub fn prepare(ds: &MultilabelDataset, seed: u64) -> Result<Prepared> {
    let s = split(ds.n(), (0.6, 0.2, 0.2), seed)?;
    let (train, val, test) = (ds.subset(&s.train), ds.subset(&s.val), ds.subset(&s.test));
    let standardizer = Standardizer::fit(&train.dense());
    Ok(Prepared {
        x_train: standardizer.apply_all(&train.dense()),
        y_train: train.observations(),
        x_val: standardizer.apply_all(&val.dense()),
        y_val: val.observations(),
        x_test: standardizer.apply_all(&test.dense()),
        y_test: test.labels,
        standardizer,
    })
}

pub fn held_out_evaluation(ds: &MultilabelDataset, seed: u64, opts: &FitOptions) -> Result<HeldOutReport> {
    let p = prepare(ds, seed)?;
    let mut lambdas = Vec::new();
    let mut by_loss = |name: &str| -> Result<Metrics> {
        let loss = LossConfig::new(name, ds.m).build()?;
        let (model, _) = fit(&loss, &p.x_train, &p.y_train, Some((&p.x_val, &p.y_val)), opts)?;
        lambdas.push((name.to_string(), model.lambda()));
        let preds = predict_all(&model, &p.x_test, &opts.budget, false)?;
        let preds: Vec<Subset> = preds.iter().map(|z| z.as_subset().expect("subset loss").clone()).collect();
        multilabel_metrics(&preds, &p.y_test)
    };
    let zero_one = by_loss("0-1")?.zero_one_loss;
    let hamming = by_loss("hamming")?.hamming_loss;
    let f1 = by_loss("fscore")?.f1_score;
    Ok(HeldOutReport {
        dataset: ds.name.clone(),
        n_train: p.x_train.len(),
        n_val: p.x_val.len(),
        n_test: p.x_test.len(),
        zero_one_loss: zero_one,
        hamming_loss: hamming,
        f1_score: f1,
        lambdas,
    })
}
