//! Synthetic multilabel problems on `[0, 1]^d` with known conditionals, and
//! learning-rate experiments.
//!
//! Label `j` is Bernoulli with `q_j(x) = sigmoid(a_j sin(2π w_j · x + b_j))`,
//! independently across labels. The phase range `Σ_i |w_ji| ≥ 1/2` guarantees
//! that every `q_j` crosses `1/2` inside the cube, so the smooth mode has
//! states with arbitrarily small margin. The hard-margin mode pushes values
//! in `(1/2 − δ, 1/2 + δ)` out to the nearest edge of the band.
//!
//! Samples are drawn from coupled uniforms (`y_j = 1` iff `u_j < q_j(x)`), so
//! two noise modes run with one seed share inputs and uniforms.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decode::DecodeBudget;
use crate::error::{Error, Result};
use crate::estimator::QsModel;
use crate::kernel::{self, KernelSpec};
use crate::label::{self, Observation, OutputLabel, Subset};
use crate::losses::{DiscreteLoss, LossConfig, LossFamily};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseMode {
    SmoothCrossing,
    HardMargin { delta: f64 },
}

impl NoiseMode {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseMode::SmoothCrossing => "smooth_crossing",
            NoiseMode::HardMargin { .. } => "hard_margin",
        }
    }
}

fn default_n_probe() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub d: usize,
    pub loss: LossConfig,
    pub noise: NoiseMode,
    pub seed: u64,
    pub n_grid: Vec<usize>,
    pub n_test: usize,
    pub replications: usize,
    /// Fixed probe points for the exact excess risk.
    #[serde(default = "default_n_probe")]
    pub n_probe: usize,
    /// Gaussian bandwidth; the median heuristic on each training set when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

impl SyntheticSpec {
    pub fn m(&self) -> usize {
        self.loss.m
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("input dimension d must be at least 1"));
        }
        if let NoiseMode::HardMargin { delta } = self.noise {
            if !(delta > 0.0 && delta < 0.5) {
                return Err(Error::invalid(alloc::format!("hard margin delta must lie in (0, 0.5), got {delta}")));
            }
        }
        if self.n_grid.is_empty() {
            return Err(Error::invalid("n_grid must not be empty"));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_grid must be positive and strictly increasing"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.n_probe == 0 {
            return Err(Error::invalid("n_probe must be at least 1"));
        }
        if let Some(bw) = self.bandwidth {
            KernelSpec::gaussian(bw)?;
        }
        let loss = self.loss.build()?;
        if loss.observation_space() != crate::losses::ObservationSpace::Subsets {
            return Err(Error::invalid("synthetic generator produces subset observations only"));
        }
        Ok(())
    }
}

/// The fixed conditional family; parameters depend only on the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilabelGenerator {
    pub d: usize,
    pub m: usize,
    pub noise: NoiseMode,
    pub amplitude: Vec<f64>,
    pub frequency: Vec<Vec<f64>>,
    pub phase: Vec<f64>,
}

/// Independent stream for `(seed, tag, index)`.
pub fn derive_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index);
    rng
}

const STREAM_PARAMS: u64 = 1;
const STREAM_PROBE: u64 = 2;
const STREAM_TRAIN: u64 = 3;
const STREAM_TEST: u64 = 4;

impl MultilabelGenerator {
    pub fn new(d: usize, m: usize, noise: NoiseMode, seed: u64) -> Self {
        let mut rng = derive_rng(seed, STREAM_PARAMS, 0);
        let mut amplitude = Vec::with_capacity(m);
        let mut frequency = Vec::with_capacity(m);
        let mut phase = Vec::with_capacity(m);
        for _ in 0..m {
            amplitude.push(rng.gen_range(2.0..=4.0));
            let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let l1: f64 = raw.iter().map(|v: &f64| v.abs()).sum::<f64>().max(1e-12);
            let target = rng.gen_range(0.5..=1.0);
            frequency.push(raw.iter().map(|v| v * target / l1).collect());
            phase.push(rng.gen_range(0.0..2.0 * PI));
        }
        Self {
            d,
            m,
            noise,
            amplitude,
            frequency,
            phase,
        }
    }

    /// `q(x) = (P([y]_j = 1 | x))_j`.
    pub fn q(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|j| {
                let arg = 2.0 * PI * math::dot(&self.frequency[j], x) + self.phase[j];
                let v = math::sigmoid(self.amplitude[j] * math::sin(arg));
                match self.noise {
                    NoiseMode::SmoothCrossing => v,
                    NoiseMode::HardMargin { delta } => {
                        if (v - 0.5).abs() >= delta {
                            v
                        } else if v < 0.5 {
                            0.5 - delta
                        } else {
                            0.5 + delta
                        }
                    }
                }
            })
            .collect()
    }

    pub fn sample_x<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.d).map(|_| rng.gen::<f64>()).collect()
    }

    /// `n` pairs drawn with coupled uniforms.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> (Vec<Vec<f64>>, Vec<Observation>) {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x = self.sample_x(rng);
            let q = self.q(&x);
            let bits = q.iter().map(|&qj| rng.gen::<f64>() < qj).collect();
            xs.push(x);
            ys.push(Observation::Subset(Subset::new(bits)));
        }
        (xs, ys)
    }
}

/// `P(y | x)` over all subsets in canonical order, for independent labels.
pub fn product_distribution(q: &[f64]) -> Vec<f64> {
    label::subsets(q.len())
        .map(|s| {
            q.iter()
                .enumerate()
                .map(|(j, &qj)| if s.contains(j) { qj } else { 1.0 - qj })
                .product()
        })
        .collect()
}

/// `ℓ(z, x)` for independent labels with marginals `q`.
pub fn conditional_risk(loss: &DiscreteLoss, z: &OutputLabel, q: &[f64]) -> Result<f64> {
    loss.validate_output(z)?;
    let m = loss.m();
    match loss.family() {
        LossFamily::Hamming => {
            let z = z.as_subset().expect("subset");
            Ok((0..m).map(|j| if z.contains(j) { 1.0 - q[j] } else { q[j] }).sum::<f64>() / m as f64)
        }
        LossFamily::PrecAtK => {
            let k = loss.prec_k().expect("prec@k") as f64;
            let z = z.as_subset().expect("subset");
            Ok(1.0 - z.ones().map(|j| q[j]).sum::<f64>() / k)
        }
        _ => {
            let pi = product_distribution(q);
            let ys = loss.enumerate_observations()?;
            Ok(ys.iter().zip(&pi).map(|(y, p)| p * loss.eval_unchecked(z, y)).sum())
        }
    }
}

/// The Bayes prediction and its risk for independent labels with marginals `q`.
pub fn bayes_optimal(loss: &DiscreteLoss, q: &[f64]) -> Result<(OutputLabel, f64)> {
    let z = match loss.family() {
        LossFamily::Hamming => OutputLabel::Subset(Subset::new(q.iter().map(|&v| v > 0.5).collect())),
        LossFamily::PrecAtK => {
            let k = loss.prec_k().expect("prec@k");
            let mut idx: Vec<usize> = (0..q.len()).collect();
            idx.sort_by(|&a, &b| q[b].total_cmp(&q[a]));
            let mut bits = Subset::empty(q.len());
            for &j in &idx[..k] {
                bits.set(j, true);
            }
            OutputLabel::KSubset { bits, k }
        }
        _ => {
            let mut best: Option<(OutputLabel, f64)> = None;
            for z in loss.enumerate_outputs()? {
                let r = conditional_risk(loss, &z, q)?;
                if best.as_ref().map_or(true, |(_, b)| r < *b) {
                    best = Some((z, r));
                }
            }
            return Ok(best.expect("nonempty output space"));
        }
    };
    let r = conditional_risk(loss, &z, q)?;
    Ok((z, r))
}

/// Mean over probe points of `ℓ(f(x), x) − ℓ(f*(x), x)`.
pub fn excess_risk_exact(loss: &DiscreteLoss, predictions: &[OutputLabel], q_probe: &[Vec<f64>]) -> Result<f64> {
    if q_probe.is_empty() {
        return Err(Error::EmptyInput("probe set"));
    }
    if predictions.len() != q_probe.len() {
        return Err(Error::DimensionMismatch {
            expected: q_probe.len(),
            found: predictions.len(),
        });
    }
    let mut total = 0.0;
    for (z, q) in predictions.iter().zip(q_probe) {
        total += conditional_risk(loss, z, q)? - bayes_optimal(loss, q)?.1;
    }
    Ok(total / q_probe.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub n: usize,
    pub replication: usize,
    pub excess_exact: f64,
    /// Test-set excess `mean L(f̂(x), y) − mean L(f*(x), y)`; `None` without a test set.
    pub excess_test: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub loss: String,
    pub noise_mode: String,
    pub records: Vec<RateRecord>,
    /// Log-log slope per replication; `None` when fewer than two usable points.
    pub replication_slopes: Vec<Option<f64>>,
    /// Slope over all usable points pooled across replications.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub notes: Vec<String>,
}

/// Data shared by all replications of one experiment.
#[derive(Debug, Clone)]
pub struct RateSetup {
    pub spec: SyntheticSpec,
    pub loss: DiscreteLoss,
    pub generator: MultilabelGenerator,
    pub probe: Vec<Vec<f64>>,
    pub q_probe: Vec<Vec<f64>>,
    pub bayes_probe: Vec<f64>,
}

pub fn rate_setup(spec: &SyntheticSpec) -> Result<RateSetup> {
    spec.validate()?;
    let loss = spec.loss.build()?;
    let generator = MultilabelGenerator::new(spec.d, spec.m(), spec.noise, spec.seed);
    let mut rng = derive_rng(spec.seed, STREAM_PROBE, 0);
    let probe: Vec<Vec<f64>> = (0..spec.n_probe).map(|_| generator.sample_x(&mut rng)).collect();
    let q_probe: Vec<Vec<f64>> = probe.iter().map(|x| generator.q(x)).collect();
    let bayes_probe = q_probe
        .iter()
        .map(|q| bayes_optimal(&loss, q).map(|(_, r)| r))
        .collect::<Result<_>>()?;
    Ok(RateSetup {
        spec: spec.clone(),
        loss,
        generator,
        probe,
        q_probe,
        bayes_probe,
    })
}

/// Runs one replication over the whole `n` grid. Training sets are nested
/// prefixes of one sample of the largest size.
pub fn rate_replication(setup: &RateSetup, replication: usize) -> Result<Vec<RateRecord>> {
    let spec = &setup.spec;
    let loss = &setup.loss;
    let n_max = *spec.n_grid.last().expect("validated");
    let mut rng = derive_rng(spec.seed, STREAM_TRAIN, replication as u64);
    let (x_all, y_all) = setup.generator.sample(&mut rng, n_max);
    let mut test_rng = derive_rng(spec.seed, STREAM_TEST, replication as u64);
    let (x_test, y_test) = setup.generator.sample(&mut test_rng, spec.n_test);
    let bayes_test: Vec<OutputLabel> = x_test
        .iter()
        .map(|x| bayes_optimal(loss, &setup.generator.q(x)).map(|(z, _)| z))
        .collect::<Result<_>>()?;
    let budget = DecodeBudget {
        seed: spec.seed,
        ..DecodeBudget::default()
    };
    let mut out = Vec::with_capacity(spec.n_grid.len());
    for &n in &spec.n_grid {
        let (x, y) = (&x_all[..n], &y_all[..n]);
        let bandwidth = match spec.bandwidth {
            Some(bw) => bw,
            None => kernel::median_bandwidth(x, 1000)?,
        };
        let model = QsModel::fit(loss, KernelSpec::gaussian(bandwidth)?, kernel::default_lambda(n), x, y)?;
        let mut excess = 0.0;
        for ((xp, q), bayes) in setup.probe.iter().zip(&setup.q_probe).zip(&setup.bayes_probe) {
            let z = model.predict(xp, &budget)?;
            excess += conditional_risk(loss, &z, q)? - bayes;
        }
        let excess_exact = excess / setup.probe.len() as f64;
        let excess_test = if x_test.is_empty() {
            None
        } else {
            let mut diff = 0.0;
            for ((x, y), zb) in x_test.iter().zip(&y_test).zip(&bayes_test) {
                let z = model.predict(x, &budget)?;
                diff += loss.eval_unchecked(&z, y) - loss.eval_unchecked(zb, y);
            }
            Some(diff / x_test.len() as f64)
        };
        out.push(RateRecord {
            n,
            replication,
            excess_exact,
            excess_test,
            seed: spec.seed,
        });
    }
    Ok(out)
}

/// Points used for slope fitting: the smallest `n` is dropped on grids of four
/// or more sizes, and non-positive excesses are dropped (and noted).
fn usable_points(grid: &[usize], records: &[&RateRecord], notes: &mut Vec<String>) -> (Vec<f64>, Vec<f64>) {
    let skip = if grid.len() >= 4 { Some(grid[0]) } else { None };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in records {
        if Some(r.n) == skip {
            continue;
        }
        if r.excess_exact > 0.0 {
            xs.push(math::ln(r.n as f64));
            ys.push(math::ln(r.excess_exact));
        } else {
            notes.push(alloc::format!(
                "replication {} at n = {}: excess {} is not positive and was left out of the slope",
                r.replication,
                r.n,
                r.excess_exact
            ));
        }
    }
    (xs, ys)
}

/// Fits the slopes of `ln(excess)` against `ln(n)`.
pub fn assemble_report(setup: &RateSetup, mut records: Vec<RateRecord>) -> RateReport {
    let spec = &setup.spec;
    records.sort_by_key(|r| (r.replication, r.n));
    let mut notes = Vec::new();
    if spec.n_grid.len() < 2 {
        notes.push(String::from("n_grid has a single size; slope is undefined"));
    }
    let mut replication_slopes = Vec::with_capacity(spec.replications);
    let mut all_x = Vec::new();
    let mut all_y = Vec::new();
    for rep in 0..spec.replications {
        let rows: Vec<&RateRecord> = records.iter().filter(|r| r.replication == rep).collect();
        let (xs, ys) = usable_points(&spec.n_grid, &rows, &mut notes);
        replication_slopes.push(math::ols_slope(&xs, &ys).map(|(s, _)| s));
        all_x.extend(xs);
        all_y.extend(ys);
    }
    let fit = math::ols_slope(&all_x, &all_y);
    if fit.is_none() && spec.n_grid.len() >= 2 {
        notes.push(String::from("fewer than two usable points; slope is undefined"));
    }
    for r in &records {
        if let Some(t) = r.excess_test {
            // three binomial standard errors of a mean of losses in [0, 1]
            let floor = -3.0 / math::sqrt(spec.n_test.max(1) as f64);
            if t < floor {
                notes.push(alloc::format!(
                    "replication {} at n = {}: test excess {t} is below the noise floor {floor}",
                    r.replication,
                    r.n
                ));
            }
        }
    }
    RateReport {
        loss: String::from(setup.loss.name()),
        noise_mode: String::from(spec.noise.label()),
        records,
        replication_slopes,
        slope: fit.map(|(s, _)| s),
        slope_stderr: fit.and_then(|(_, e)| e),
        notes,
    }
}

/// Sequential driver; callers wanting parallelism run [`rate_replication`]
/// per replication and pass the records to [`assemble_report`].
pub fn rate_experiment(spec: &SyntheticSpec) -> Result<RateReport> {
    let setup = rate_setup(spec)?;
    let mut records = Vec::new();
    for rep in 0..spec.replications {
        records.extend(rate_replication(&setup, rep)?);
    }
    Ok(assemble_report(&setup, records))
}
