//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// The gate does not satisfy the (generalized) controlled-stochastic
    /// condition; carries the best-fit residual.
    #[error("gate is not controlled-stochastic (residual {residual:.3e})")]
    NotControlledStochastic { residual: f64 },

    #[error("rewrite not applicable: {0}")]
    RewriteNotApplicable(String),

    /// Trajectory sampling needs controlled structure with nonnegative,
    /// probability-conserving blocks.
    #[error("gate is not samplable: {0}")]
    NotSamplable(String),

    #[error("theorem not applicable: {0}")]
    TheoremNotApplicable(String),

    #[error("contraction window too large: {0}")]
    WindowTooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
