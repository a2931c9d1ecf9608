//! Exact population quantities on problems with finitely many input states:
//! Bayes risks, margins, the low-noise moment and the comparison inequalities
//! relating surrogate and true excess risk.
//!
//! Writing `M_p = E[γ(X)^{-p}]` (so `γ_p = ‖1/γ‖_{L_p} = M_p^{1/p}`), the
//! checks below use
//!
//! * basic comparison: `E(d∘g) − E(f*) ≤ 2‖F‖∞ √(R(g) − R(g*))`,
//! * improved comparison: `E(d∘g) − E(f*) ≤ M_p^{1/(p+2)} (16‖F‖∞² (R(g) − R(g*)))^{(p+1)/(p+2)}`,
//! * error-set bound: `P_X(f ≠ f*) ≤ M_p^{1/(p+1)} (E(f) − E(f*))^{p/(p+1)}`.
//!
//! Both low-noise bounds follow from Hölder's inequality with the moment
//! `M_p`; stated with `γ_p` in place of `M_p` they fail whenever `γ_p > 1`.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decode::{self, DecodeBudget};
use crate::error::{Error, Result};
use crate::label::{Observation, OutputLabel};
use crate::losses::{exact_constant, DiscreteLoss};
use crate::math;
use crate::matrix::Matrix;

/// Relative slack for the inequality checks, covering rounding only.
const CHECK_RTOL: f64 = 1e-12;

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + CHECK_RTOL * (1.0 + rhs.abs())
}

/// A distribution over finitely many input states with exact conditionals
/// over the enumerated observation space.
#[derive(Debug, Clone)]
pub struct FiniteProblem {
    loss: DiscreteLoss,
    marginal: Vec<f64>,
    conditionals: Vec<Vec<f64>>,
    outputs: Vec<OutputLabel>,
    observations: Vec<Observation>,
    /// `L(z, y)` for every enumerated pair, `|Z| × |Y|`.
    table: Matrix,
    /// `U_y` per enumerated observation.
    embeddings: Vec<Vec<f64>>,
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid(alloc::format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(alloc::format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

impl FiniteProblem {
    /// `conditionals[s][i]` is `P(y_i | state s)` over the loss's observation
    /// space in canonical order.
    pub fn new(loss: &DiscreteLoss, marginal: Vec<f64>, conditionals: Vec<Vec<f64>>) -> Result<Self> {
        if marginal.is_empty() {
            return Err(Error::EmptyInput("input states"));
        }
        if conditionals.len() != marginal.len() {
            return Err(Error::DimensionMismatch {
                expected: marginal.len(),
                found: conditionals.len(),
            });
        }
        check_distribution(&marginal, "marginal")?;
        let outputs = loss.enumerate_outputs()?;
        let observations = loss.enumerate_observations()?;
        for c in &conditionals {
            if c.len() != observations.len() {
                return Err(Error::DimensionMismatch {
                    expected: observations.len(),
                    found: c.len(),
                });
            }
            check_distribution(c, "conditional")?;
        }
        let mut table = Matrix::zeros(outputs.len(), observations.len());
        for (a, z) in outputs.iter().enumerate() {
            for (b, y) in observations.iter().enumerate() {
                table[(a, b)] = loss.eval_unchecked(z, y);
            }
        }
        let embeddings = observations.iter().map(|y| loss.embed_unchecked(y)).collect();
        Ok(Self {
            loss: loss.clone(),
            marginal,
            conditionals,
            outputs,
            observations,
            table,
            embeddings,
        })
    }

    /// Random problem: masses and conditionals are normalized powers of
    /// exponential draws, so some states are nearly deterministic and others
    /// nearly uniform.
    pub fn random<R: Rng + ?Sized>(loss: &DiscreteLoss, states: usize, rng: &mut R) -> Result<Self> {
        let ny = loss.observation_space_size() as usize;
        let draw = |rng: &mut R, power: f64| -> f64 { math::powf(-math::ln(1.0 - rng.gen::<f64>()), power) };
        let marginal = normalize((0..states).map(|_| draw(rng, 1.0)).collect());
        let conditionals = (0..states)
            .map(|_| {
                let power = [0.5, 1.0, 2.0, 4.0][rng.gen_range(0..4)];
                normalize((0..ny).map(|_| draw(rng, power) + 1e-12).collect())
            })
            .collect();
        Self::new(loss, marginal, conditionals)
    }

    pub fn loss(&self) -> &DiscreteLoss {
        &self.loss
    }

    pub fn states(&self) -> usize {
        self.marginal.len()
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn conditional(&self, state: usize) -> &[f64] {
        &self.conditionals[state]
    }

    pub fn outputs(&self) -> &[OutputLabel] {
        &self.outputs
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// `ℓ(z, x) = Σ_y P(y|x) L(z, y)` for every enumerated `z`.
    pub fn risks(&self, state: usize) -> Vec<f64> {
        let pi = &self.conditionals[state];
        (0..self.outputs.len())
            .map(|a| math::dot(self.table.row(a), pi))
            .collect()
    }

    /// `ℓ(z, x)` for one prediction.
    pub fn bayes_risk(&self, z: &OutputLabel, state: usize) -> Result<f64> {
        self.loss.validate_output(z)?;
        let pi = &self.conditionals[state];
        Ok(self
            .observations
            .iter()
            .zip(pi)
            .map(|(y, p)| p * self.loss.eval_unchecked(z, y))
            .sum())
    }

    fn bayes_index(&self, state: usize) -> (usize, Vec<f64>) {
        let risks = self.risks(state);
        (crate::decode::canonical_argmin(&risks), risks)
    }

    /// `f*(x)`, the first minimizer in canonical order.
    pub fn bayes_predictor(&self, state: usize) -> OutputLabel {
        self.outputs[self.bayes_index(state).0].clone()
    }

    /// `γ(x) = min_{z ≠ f*(x)} ℓ(z, x) − ℓ(f*(x), x)`; zero on ties.
    pub fn margin(&self, state: usize) -> Result<f64> {
        if self.outputs.len() < 2 {
            return Err(Error::invalid("margin needs at least two predictions"));
        }
        let (best, risks) = self.bayes_index(state);
        let gap = risks
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != best)
            .map(|(_, &v)| v - risks[best])
            .fold(f64::INFINITY, f64::min);
        Ok(gap.max(0.0))
    }

    pub fn margins(&self) -> Result<Vec<f64>> {
        (0..self.states()).map(|s| self.margin(s)).collect()
    }

    /// `M_p = Σ_x P_X(x) γ(x)^{-p}` over states with positive mass.
    pub fn gamma_moment(&self, p: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(Error::invalid("noise exponent p must be positive"));
        }
        let mut total = 0.0;
        for (s, &w) in self.marginal.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let g = self.margin(s)?;
            if g <= 0.0 {
                return Err(Error::ZeroMargin { state: s });
            }
            total += w * math::powf(g, -p);
        }
        Ok(total)
    }

    /// `γ_p = ‖1/γ‖_{L_p(P_X)} = M_p^{1/p}`.
    pub fn gamma_p_norm(&self, p: f64) -> Result<f64> {
        Ok(math::powf(self.gamma_moment(p)?, 1.0 / p))
    }

    /// `g*(x) = Σ_y P(y|x) U_y`.
    pub fn g_star(&self, state: usize) -> Vec<f64> {
        let mut g = alloc::vec![0.0; self.loss.r()];
        for (u, &p) in self.embeddings.iter().zip(&self.conditionals[state]) {
            if p == 0.0 {
                continue;
            }
            for (gj, uj) in g.iter_mut().zip(u) {
                *gj += p * uj;
            }
        }
        g
    }

    /// `Σ_x P_X(x) ‖g(x) − g*(x)‖²`.
    pub fn surrogate_excess(&self, g: &[Vec<f64>]) -> Result<f64> {
        if g.len() != self.states() {
            return Err(Error::DimensionMismatch {
                expected: self.states(),
                found: g.len(),
            });
        }
        let mut total = 0.0;
        for (s, gs) in g.iter().enumerate() {
            if gs.len() != self.loss.r() {
                return Err(Error::DimensionMismatch {
                    expected: self.loss.r(),
                    found: gs.len(),
                });
            }
            let star = self.g_star(s);
            let d2: f64 = gs.iter().zip(&star).map(|(a, b)| (a - b) * (a - b)).sum();
            total += self.marginal[s] * d2;
        }
        Ok(total)
    }

    /// `E(f) − E(f*)` for a per-state predictor.
    pub fn excess_risk(&self, f: &[OutputLabel]) -> Result<f64> {
        if f.len() != self.states() {
            return Err(Error::DimensionMismatch {
                expected: self.states(),
                found: f.len(),
            });
        }
        let mut total = 0.0;
        for (s, z) in f.iter().enumerate() {
            let (best, risks) = self.bayes_index(s);
            let idx = self.output_index(z)?;
            total += self.marginal[s] * (risks[idx] - risks[best]);
        }
        Ok(total)
    }

    fn output_index(&self, z: &OutputLabel) -> Result<usize> {
        self.loss.validate_output(z)?;
        self.outputs
            .iter()
            .position(|o| o == z)
            .ok_or_else(|| Error::label(None, "prediction not in the output space"))
    }

    /// `P_X(f ≠ f*)`.
    pub fn error_mass(&self, f: &[OutputLabel]) -> Result<f64> {
        if f.len() != self.states() {
            return Err(Error::DimensionMismatch {
                expected: self.states(),
                found: f.len(),
            });
        }
        let mut total = 0.0;
        for (s, z) in f.iter().enumerate() {
            if self.output_index(z)? != self.bayes_index(s).0 {
                total += self.marginal[s];
            }
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    /// True excess risk of `d ∘ g`.
    pub lhs: f64,
    pub surrogate_excess: f64,
    pub rhs_basic: f64,
    pub holds_basic: bool,
    /// `None` when some state with positive mass has zero margin.
    pub rhs_improved: Option<f64>,
    pub holds_improved: Option<bool>,
}

/// `2‖F‖∞ √e`.
pub fn basic_bound(f_norm: f64, surrogate_excess: f64) -> f64 {
    2.0 * f_norm * math::sqrt(surrogate_excess)
}

/// `M_p^{1/(p+2)} (16‖F‖∞² e)^{(p+1)/(p+2)}`.
pub fn improved_bound(f_norm: f64, surrogate_excess: f64, p: f64, moment: f64) -> f64 {
    math::powf(moment, 1.0 / (p + 2.0))
        * math::powf(16.0 * f_norm * f_norm * surrogate_excess, (p + 1.0) / (p + 2.0))
}

/// Evaluates both comparison inequalities for the surrogate `g` (one vector
/// per state), decoding with the loss's fast decoder.
pub fn comparison_check(
    problem: &FiniteProblem,
    g: &[Vec<f64>],
    p: f64,
    budget: &DecodeBudget,
) -> Result<ComparisonRecord> {
    let surrogate_excess = problem.surrogate_excess(g)?;
    let f: Vec<OutputLabel> = g
        .iter()
        .map(|gs| decode::decode(problem.loss(), gs, budget))
        .collect::<Result<_>>()?;
    let lhs = problem.excess_risk(&f)?;
    let f_norm = exact_constant(problem.loss()).f_inf_norm;
    let rhs_basic = basic_bound(f_norm, surrogate_excess);
    let rhs_improved = match problem.gamma_moment(p) {
        Ok(moment) => Some(improved_bound(f_norm, surrogate_excess, p, moment)),
        Err(Error::ZeroMargin { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ComparisonRecord {
        lhs,
        surrogate_excess,
        rhs_basic,
        holds_basic: holds(lhs, rhs_basic),
        rhs_improved,
        holds_improved: rhs_improved.map(|r| holds(lhs, r)),
    })
}

/// `H(ε) = ε² / (4‖F‖∞²)`.
pub fn calibration_h(f_norm: f64, eps: f64) -> f64 {
    eps * eps / (4.0 * f_norm * f_norm)
}

/// `H_p(ε) = (γ_p ε^p)^{1/(p+1)} · H(½ (ε / γ_p)^{1/(p+1)})`.
pub fn calibration_h_p(f_norm: f64, eps: f64, p: f64, gamma_p: f64) -> f64 {
    let q = 1.0 / (p + 1.0);
    math::powf(gamma_p * math::powf(eps, p), q) * calibration_h(f_norm, 0.5 * math::powf(eps / gamma_p, q))
}

/// Right side of the dominance check `H_p(ε) ≥ γ_p^{1/(p+1)} H(ε / (2 γ_p^{1/(p+1)}))`.
/// The inequality reduces to `ε^{(p+2)/(p+1)} ≥ ε²`, so it holds exactly on
/// `0 ≤ ε ≤ 1`, which covers every excess of a loss bounded by 1.
pub fn calibration_dominance_rhs(f_norm: f64, eps: f64, p: f64, gamma_p: f64) -> f64 {
    let s = math::powf(gamma_p, 1.0 / (p + 1.0));
    s * calibration_h(f_norm, eps / (2.0 * s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsybakovRecord {
    pub error_mass: f64,
    pub excess: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `P_X(f ≠ f*) ≤ M_p^{1/(p+1)} (E(f) − E(f*))^{p/(p+1)}`.
pub fn tsybakov_check(problem: &FiniteProblem, f: &[OutputLabel], p: f64) -> Result<TsybakovRecord> {
    let moment = problem.gamma_moment(p)?;
    let error_mass = problem.error_mass(f)?;
    let excess = problem.excess_risk(f)?.max(0.0);
    let bound = math::powf(moment, 1.0 / (p + 1.0)) * math::powf(excess, p / (p + 1.0));
    Ok(TsybakovRecord {
        error_mass,
        excess,
        bound,
        holds: holds(error_mass, bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Subset;
    use crate::losses::LossConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hamming1() -> DiscreteLoss {
        LossConfig::new("hamming", 1).build().unwrap()
    }

    #[test]
    fn binary_margin_is_twice_distance_from_half() {
        // Y = {0, 1}, P(y = 1) = 0.8; the margin equals |E[2y - 1]| = 0.6 for
        // the 0-1 loss on one label
        let loss = LossConfig::new("0-1", 1).build().unwrap();
        let p = FiniteProblem::new(&loss, vec![1.0], vec![vec![0.2, 0.8]]).unwrap();
        assert!((p.margin(0).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(p.bayes_predictor(0).as_subset().unwrap().to_bit_string(), "1");
    }

    #[test]
    fn uniform_conditional_has_zero_margin() {
        let p = FiniteProblem::new(&hamming1(), vec![1.0], vec![vec![0.5, 0.5]]).unwrap();
        assert_eq!(p.margin(0).unwrap(), 0.0);
        for z in p.outputs() {
            assert_eq!(p.bayes_risk(z, 0).unwrap(), 0.5);
        }
        assert_eq!(p.bayes_predictor(0), p.outputs()[0]);
        assert!(matches!(p.gamma_p_norm(1.0), Err(Error::ZeroMargin { state: 0 })));
    }

    #[test]
    fn gamma_norm_examples() {
        // γ = |1 - 2q| for hamming with one label
        let p = FiniteProblem::new(&hamming1(), vec![1.0], vec![vec![0.25, 0.75]]).unwrap();
        assert!((p.gamma_p_norm(1.0).unwrap() - 2.0).abs() < 1e-12);
        let p = FiniteProblem::new(&hamming1(), vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        for q in [0.5, 1.0, 3.0] {
            assert!((p.gamma_p_norm(q).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn surrogate_excess_examples() {
        let loss = LossConfig::new("hamming", 2).build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = FiniteProblem::random(&loss, 1, &mut rng).unwrap();
        let star = vec![p.g_star(0)];
        assert_eq!(p.surrogate_excess(&star).unwrap(), 0.0);
        let mut moved = star.clone();
        moved[0][0] += 0.3;
        assert!((p.surrogate_excess(&moved).unwrap() - 0.09).abs() < 1e-14);
    }

    #[test]
    fn hamming_bayes_is_thresholding() {
        let loss = LossConfig::new("hamming", 4).build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = FiniteProblem::random(&loss, 20, &mut rng).unwrap();
        for s in 0..p.states() {
            let mut q = [0.0; 4];
            for (y, &pr) in p.observations().iter().zip(p.conditional(s)) {
                for (j, qj) in q.iter_mut().enumerate() {
                    if y.as_subset().unwrap().contains(j) {
                        *qj += pr;
                    }
                }
            }
            let expected = Subset::new(q.iter().map(|&v| v > 0.5).collect());
            assert_eq!(p.bayes_predictor(s).as_subset().unwrap(), &expected);
        }
    }

    #[test]
    fn tsybakov_single_state_analytic() {
        // one state, wrong prediction: error mass 1, excess = γ
        let p = FiniteProblem::new(&hamming1(), vec![1.0], vec![vec![0.45, 0.55]]).unwrap();
        let wrong = vec![OutputLabel::Subset(Subset::empty(1))];
        let gamma = p.margin(0).unwrap();
        for q in [0.5, 1.0, 2.0] {
            let rec = tsybakov_check(&p, &wrong, q).unwrap();
            assert_eq!(rec.error_mass, 1.0);
            assert!((rec.excess - gamma).abs() < 1e-15);
            assert!(rec.holds && rec.bound >= 1.0 - 1e-12);
        }
        let right = vec![p.bayes_predictor(0)];
        let rec = tsybakov_check(&p, &right, 1.0).unwrap();
        assert_eq!((rec.error_mass, rec.bound), (0.0, 0.0));
    }

    #[test]
    fn norm_form_of_the_error_set_bound_fails() {
        // γ = 0.1 and p = 2: γ_p^{1/(p+1)} excess^{p/(p+1)} = (10 · 0.01)^{1/3} < 1
        let p = FiniteProblem::new(&hamming1(), vec![1.0], vec![vec![0.45, 0.55]]).unwrap();
        let gp = p.gamma_p_norm(2.0).unwrap();
        let excess: f64 = 0.1;
        assert!(gp.powf(1.0 / 3.0) * excess.powf(2.0 / 3.0) < 0.5);
    }

    #[test]
    fn calibration_values() {
        assert_eq!(calibration_h(0.5, 0.0), 0.0);
        assert!((calibration_h(0.5, 1.0) - 1.0).abs() < 1e-15);
        for &(p, g) in &[(0.5, 1.3), (1.0, 4.0), (2.0, 0.7)] {
            for i in 1..=100 {
                let eps = i as f64 / 100.0;
                let lhs = calibration_h_p(0.7, eps, p, g);
                let rhs = calibration_dominance_rhs(0.7, eps, p, g);
                assert!(lhs >= rhs * (1.0 - 1e-12));
            }
        }
    }
}
