use thiserror::Error;

/// Errors raised by tensor algebra, means, bounds and the verification harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("tensor is not Hermitian (defect {defect:e} exceeds {allowed:e})")]
    NotHermitian { defect: f64, allowed: f64 },

    #[error("tensor is not positive definite (lambda_min = {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("tensor is not positive semidefinite (lambda_min = {lambda_min:e})")]
    NotPositiveSemidefinite { lambda_min: f64 },

    #[error("spectrum outside the domain of {function}: value at {at} is {value}")]
    Domain {
        function: String,
        at: f64,
        value: f64,
    },

    #[error("Ky Fan index {k} out of range 1..={dim}")]
    KyFanOutOfRange { k: usize, dim: usize },

    #[error("value {target} not bracketed by {function} within 2^-64..2^64")]
    Range { function: String, target: f64 },

    #[error("domination violated: range of X not contained in range of Y (residual {residual:e})")]
    Domination { residual: f64 },

    #[error("unsupported function: {0}")]
    UnsupportedFunction(String),

    #[error("invalid connection function: {0}")]
    InvalidFunction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = core::result::Result<T, Error>;
