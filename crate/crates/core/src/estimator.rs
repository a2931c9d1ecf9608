//! The QS estimator: kernel ridge regression of `ψ(y) = U_y` followed by
//! decoding `argmin_z F_z · ĝ(x)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::decode::{self, DecodeBudget};
use crate::error::{Error, Result};
use crate::kernel::{self, KernelSpec, RidgeSolution};
use crate::label::{Observation, OutputLabel};
use crate::losses::DiscreteLoss;
use crate::matrix::Matrix;

/// A fitted surrogate regressor.
///
/// Columns of `Ψ` that are zero for every training observation stay zero in
/// `ĝ`, so only the `active` columns are solved and stored. This keeps the
/// 0-1 loss, whose embedding has `2^m` columns, at `O(n · distinct labels)`.
#[derive(Debug, Clone)]
pub struct QsModel {
    loss: DiscreteLoss,
    kernel: KernelSpec,
    x_train: Vec<Vec<f64>>,
    observations: Vec<Observation>,
    active: Vec<usize>,
    ridge: RidgeSolution,
}

fn embed_all(loss: &DiscreteLoss, y: &[Observation]) -> Result<(Vec<usize>, Matrix)> {
    let r = loss.r();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(y.len());
    let mut used = vec![false; r];
    for (i, yi) in y.iter().enumerate() {
        let u = loss.embed(yi).map_err(|e| match e {
            Error::InvalidLabel { reason, .. } => Error::InvalidLabel { index: Some(i), reason },
            other => other,
        })?;
        let nz: Vec<(usize, f64)> = u
            .into_iter()
            .enumerate()
            .filter(|&(_, v)| v != 0.0)
            .collect();
        for &(j, _) in &nz {
            used[j] = true;
        }
        rows.push(nz);
    }
    let active: Vec<usize> = (0..r).filter(|&j| used[j]).collect();
    let mut column_of = vec![usize::MAX; r];
    for (c, &j) in active.iter().enumerate() {
        column_of[j] = c;
    }
    let mut psi = Matrix::zeros(y.len(), active.len());
    for (i, nz) in rows.iter().enumerate() {
        for &(j, v) in nz {
            psi[(i, column_of[j])] = v;
        }
    }
    Ok((active, psi))
}

impl QsModel {
    /// Solves `(K + λnI) C = Ψ` with one Cholesky factorization.
    pub fn fit(
        loss: &DiscreteLoss,
        kernel: KernelSpec,
        lambda: f64,
        x: &[Vec<f64>],
        y: &[Observation],
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyInput("training set"));
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        let (active, psi) = embed_all(loss, y)?;
        let gram = kernel::build_gram(&kernel, x)?;
        let ridge = kernel::solve_ridge(&gram, &psi, lambda)?;
        Ok(Self {
            loss: loss.clone(),
            kernel,
            x_train: x.to_vec(),
            observations: y.to_vec(),
            active,
            ridge,
        })
    }

    /// Rebuilds a model from stored coefficients; the factorization is
    /// recomputed from the training inputs.
    pub fn from_parts(
        loss: &DiscreteLoss,
        kernel: KernelSpec,
        lambda: f64,
        x: Vec<Vec<f64>>,
        y: Vec<Observation>,
        active: Vec<usize>,
        coefficients: Matrix,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyInput("training set"));
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if active.len() != coefficients.cols() || active.iter().any(|&j| j >= loss.r()) {
            return Err(Error::invalid("active columns do not match the coefficient matrix"));
        }
        if active.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("active columns must be strictly increasing"));
        }
        for (i, yi) in y.iter().enumerate() {
            loss.validate_observation(yi).map_err(|e| match e {
                Error::InvalidLabel { reason, .. } => Error::InvalidLabel { index: Some(i), reason },
                other => other,
            })?;
        }
        let gram = kernel::build_gram(&kernel, &x)?;
        let ridge = RidgeSolution::from_parts(&gram, coefficients, lambda)?;
        Ok(Self {
            loss: loss.clone(),
            kernel,
            x_train: x,
            observations: y,
            active,
            ridge,
        })
    }

    pub fn loss(&self) -> &DiscreteLoss {
        &self.loss
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.ridge.lambda
    }

    pub fn n(&self) -> usize {
        self.x_train.len()
    }

    pub fn input_dim(&self) -> usize {
        self.x_train[0].len()
    }

    pub fn x_train(&self) -> &[Vec<f64>] {
        &self.x_train
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Embedding columns that are nonzero for some training observation.
    pub fn active_columns(&self) -> &[usize] {
        &self.active
    }

    /// `C`, restricted to the active columns.
    pub fn coefficients(&self) -> &Matrix {
        &self.ridge.coefficients
    }

    /// `ĝ(x) = Σ_i k(x, x_i) C_i`, a vector of length `r`.
    pub fn g_hat(&self, x: &[f64]) -> Result<Vec<f64>> {
        let kx = kernel::kernel_column(&self.kernel, &self.x_train, x)?;
        let compact = self.ridge.coefficients.transpose_mul_vec(&kx);
        let mut g = vec![0.0; self.loss.r()];
        for (&j, v) in self.active.iter().zip(compact) {
            g[j] = v;
        }
        Ok(g)
    }

    /// `α(x) = (K + nλI)⁻¹ K_x`, reusing the training factorization.
    pub fn alpha(&self, x: &[f64]) -> Result<Vec<f64>> {
        let kx = kernel::kernel_column(&self.kernel, &self.x_train, x)?;
        self.ridge.apply_inverse(&kx)
    }

    /// `Σ_i α_i(x) ψ(y_i)`; equals [`Self::g_hat`] up to rounding.
    pub fn g_hat_from_alpha(&self, x: &[f64]) -> Result<Vec<f64>> {
        let alpha = self.alpha(x)?;
        decode::weighted_embedding(&self.loss, &alpha, &self.observations)
    }

    /// Fast path: decode `ĝ(x)`.
    pub fn predict(&self, x: &[f64], budget: &DecodeBudget) -> Result<OutputLabel> {
        decode::decode(&self.loss, &self.g_hat(x)?, budget)
    }

    /// Decomposition-free path: `argmin_z Σ_i α_i(x) L(z, y_i)` by enumeration.
    pub fn predict_alpha(&self, x: &[f64]) -> Result<OutputLabel> {
        let alpha = self.alpha(x)?;
        decode::decode_bruteforce(&self.loss, &alpha, &self.observations)
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>], budget: &DecodeBudget) -> Result<Vec<OutputLabel>> {
        xs.iter().map(|x| self.predict(x, budget)).collect()
    }
}

/// Mean loss of `predictions` against `observations`.
pub fn empirical_risk(
    loss: &DiscreteLoss,
    predictions: &[OutputLabel],
    observations: &[Observation],
) -> Result<f64> {
    if observations.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    if predictions.len() != observations.len() {
        return Err(Error::DimensionMismatch {
            expected: observations.len(),
            found: predictions.len(),
        });
    }
    let mut total = 0.0;
    for (z, y) in predictions.iter().zip(observations) {
        total += loss.eval(z, y)?;
    }
    Ok(total / observations.len() as f64)
}

/// Mean loss of a fitted model on a test set.
pub fn model_risk(
    model: &QsModel,
    x_test: &[Vec<f64>],
    y_test: &[Observation],
    budget: &DecodeBudget,
) -> Result<f64> {
    let predictions = model.predict_batch(x_test, budget)?;
    empirical_risk(model.loss(), &predictions, y_test)
}
