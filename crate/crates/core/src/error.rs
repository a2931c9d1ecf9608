use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid label{}: {reason}", index.map(|i| alloc::format!(" at index {i}")).unwrap_or_default())]
    InvalidLabel { index: Option<usize>, reason: String },

    #[error("cholesky factorization failed at row {index} (pivot {pivot:e})")]
    Factorization { index: usize, pivot: f64 },

    #[error("{what} has {size} elements, above the enumeration limit {limit}; use a sampled check")]
    SpaceTooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("exact decoding needs m <= {limit} (got m = {m}) and no heuristic is allowed")]
    BudgetExceeded { m: usize, limit: usize },

    #[error("zero margin on state {state} with positive mass; gamma_p is infinite")]
    ZeroMargin { state: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn label(index: Option<usize>, reason: impl Into<String>) -> Self {
        Error::InvalidLabel {
            index,
            reason: reason.into(),
        }
    }
}
