//! Kernels, Gram matrices and the regularized solve `(K + λnI) C = Ψ`.
//!
//! One Cholesky factorization of `K + λnI` is computed per fit and reused for
//! every right-hand side: all `r` embedding columns during training and every
//! `K_x` when weights `α(x)` are requested at prediction time.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{Cholesky, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(-‖x - x'‖² / (2 bandwidth²))`
    Gaussian { bandwidth: f64 },
    Linear,
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(alloc::format!(
                "gaussian bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(KernelSpec::Gaussian { bandwidth })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { bandwidth } => Self::gaussian(bandwidth).map(|_| ()),
            KernelSpec::Linear => Ok(()),
        }
    }

    /// `sup_x sqrt(k(x, x))` when it is finite (only for the gaussian kernel).
    pub fn kappa(&self) -> Option<f64> {
        match self {
            KernelSpec::Gaussian { .. } => Some(1.0),
            KernelSpec::Linear => None,
        }
    }

    #[inline]
    fn eval_unchecked(&self, x1: &[f64], x2: &[f64]) -> f64 {
        match *self {
            KernelSpec::Gaussian { bandwidth } => {
                let d2: f64 = x1
                    .iter()
                    .zip(x2)
                    .map(|(a, b)| {
                        let t = a - b;
                        t * t
                    })
                    .sum();
                math::exp(-d2 / (2.0 * bandwidth * bandwidth))
            }
            KernelSpec::Linear => math::dot(x1, x2),
        }
    }
}

pub fn eval_kernel(spec: &KernelSpec, x1: &[f64], x2: &[f64]) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::DimensionMismatch {
            expected: x1.len(),
            found: x2.len(),
        });
    }
    Ok(spec.eval_unchecked(x1, x2))
}

fn check_dims(points: &[Vec<f64>]) -> Result<usize> {
    let d = points.first().ok_or(Error::EmptyInput("feature list"))?.len();
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
    }
    Ok(d)
}

/// `k(x, x_i)` for every training point.
pub fn kernel_column(spec: &KernelSpec, train: &[Vec<f64>], x: &[f64]) -> Result<Vec<f64>> {
    let d = train.first().ok_or(Error::EmptyInput("training inputs"))?.len();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    Ok(train.iter().map(|xi| spec.eval_unchecked(x, xi)).collect())
}

/// Symmetric kernel matrix `K_ij = k(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: Matrix,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.entries
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                let a = self.entries[(i, j)];
                let b = self.entries[(j, i)];
                let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
                worst = worst.max((a - b).abs() / scale);
            }
        }
        worst
    }

    /// Positive semidefiniteness check: Cholesky of `K + εI` with
    /// `ε = 1e-10 · trace(K) / n`.
    pub fn is_psd(&self) -> bool {
        let n = self.n();
        let eps = 1e-10 * self.entries.trace() / n as f64;
        let mut shifted = self.entries.clone();
        for i in 0..n {
            shifted[(i, i)] += eps.max(f64::MIN_POSITIVE);
        }
        Cholesky::factor(&shifted).is_ok()
    }
}

pub fn build_gram(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<GramMatrix> {
    spec.validate()?;
    check_dims(points)?;
    let n = points.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = spec.eval_unchecked(&points[i], &points[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(GramMatrix { entries: k })
}

/// Coefficients `C` with `(K + λnI) C = Ψ` plus the factorization that
/// produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeSolution {
    pub coefficients: Matrix,
    pub lambda: f64,
    factor: Cholesky,
}

impl RidgeSolution {
    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }

    /// `(K + λnI)⁻¹ v`.
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.factor.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.factor.dim(),
                found: v.len(),
            });
        }
        Ok(self.factor.solve(v))
    }

    /// Relative residual `‖(K + λnI) C − Ψ‖_F / ‖Ψ‖_F` (absolute when `Ψ = 0`).
    pub fn residual(&self, gram: &GramMatrix, psi: &Matrix) -> f64 {
        let n = gram.n();
        let mut lhs = gram.matrix().matmul(&self.coefficients).expect("shapes");
        let shift = self.lambda * n as f64;
        for i in 0..n {
            for (o, c) in lhs.row_mut(i).iter_mut().zip(self.coefficients.row(i)) {
                *o += shift * c;
            }
        }
        let mut diff = 0.0;
        for (a, b) in lhs.as_slice().iter().zip(psi.as_slice()) {
            diff += (a - b) * (a - b);
        }
        let scale = psi.frobenius_norm();
        let diff = math::sqrt(diff);
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }
}

fn shifted_factor(gram: &GramMatrix, lambda: f64) -> Result<Cholesky> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(alloc::format!(
            "ridge parameter must be positive, got {lambda}"
        )));
    }
    let n = gram.n();
    let mut a = gram.matrix().clone();
    let shift = lambda * n as f64;
    for i in 0..n {
        a[(i, i)] += shift;
    }
    Cholesky::factor(&a)
}

pub fn solve_ridge(gram: &GramMatrix, psi: &Matrix, lambda: f64) -> Result<RidgeSolution> {
    if psi.rows() != gram.n() {
        return Err(Error::DimensionMismatch {
            expected: gram.n(),
            found: psi.rows(),
        });
    }
    let factor = shifted_factor(gram, lambda)?;
    let coefficients = factor.solve_matrix(psi)?;
    Ok(RidgeSolution {
        coefficients,
        lambda,
        factor,
    })
}

impl RidgeSolution {
    /// Reattaches stored coefficients to a fresh factorization of `K + λnI`.
    pub fn from_parts(gram: &GramMatrix, coefficients: Matrix, lambda: f64) -> Result<Self> {
        if coefficients.rows() != gram.n() {
            return Err(Error::DimensionMismatch {
                expected: gram.n(),
                found: coefficients.rows(),
            });
        }
        let factor = shifted_factor(gram, lambda)?;
        Ok(RidgeSolution {
            coefficients,
            lambda,
            factor,
        })
    }
}

/// `α(x) = (K + nλI)⁻¹ K_x` computed from scratch.
pub fn weights_at(
    gram: &GramMatrix,
    spec: &KernelSpec,
    train: &[Vec<f64>],
    x: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    if train.len() != gram.n() {
        return Err(Error::DimensionMismatch {
            expected: gram.n(),
            found: train.len(),
        });
    }
    let factor = shifted_factor(gram, lambda)?;
    let kx = kernel_column(spec, train, x)?;
    Ok(factor.solve(&kx))
}

/// Median pairwise Euclidean distance, over at most `max_points` inputs.
pub fn median_bandwidth(points: &[Vec<f64>], max_points: usize) -> Result<f64> {
    check_dims(points)?;
    let take = points.len().min(max_points.max(2));
    let mut dists = Vec::with_capacity(take * (take - 1) / 2);
    for i in 0..take {
        for j in 0..i {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(math::sqrt(d2));
        }
    }
    match math::median(&dists) {
        Some(m) if m > 0.0 => Ok(m),
        _ => Ok(1.0),
    }
}

/// Default regularization `λ = n^{-1/2}`.
pub fn default_lambda(n: usize) -> f64 {
    1.0 / math::sqrt(n.max(1) as f64)
}

/// Validation grid `{10^k · n^{-1/2} : k = -3..=1}`.
pub fn lambda_grid(n: usize) -> Vec<f64> {
    let base = default_lambda(n);
    (-3..=1).map(|k| base * math::powf(10.0, k as f64)).collect()
}
