//! Quadratic surrogate (QS) estimation for structured prediction with
//! discrete losses.
//!
//! The estimator regresses an embedding `U_y` of the observations with kernel
//! ridge regression and decodes a prediction as `argmin_z F_z · g(x)`, where
//! `L(z, y) = F_z · U_y + c` is an affine decomposition of the loss. The crate
//! provides:
//!
//! * [`kernel`]: kernels, Gram matrices and the shared Cholesky ridge solve.
//! * [`losses`]: multilabel and ranking losses with their decompositions and
//!   sharp constants.
//! * [`decode`]: per-loss fast decoders plus a brute-force oracle.
//! * [`estimator`]: fitting and prediction along both the coefficient path and
//!   the weight (`alpha`) path.
//! * [`theory`]: exact Bayes risks, margins and comparison inequalities on
//!   finite problems.
//! * [`synth`]: synthetic multilabel generators and learning-rate experiments.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod decode;
pub mod error;
pub mod estimator;
pub mod kernel;
pub mod label;
pub mod losses;
pub mod math;
pub mod matrix;
pub mod synth;
pub mod theory;

pub use decode::{canonical_argmin, decode, decode_bruteforce, DecodeBudget, Heuristic};
pub use error::{Error, Result};
pub use estimator::QsModel;
pub use kernel::{GramMatrix, KernelSpec, RidgeSolution};
pub use label::{Observation, OutputLabel, Permutation, Subset};
pub use losses::{DiscreteLoss, LossConfig, SharpConstant};
pub use matrix::Matrix;
