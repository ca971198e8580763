use thiserror::Error;

/// Errors produced anywhere in the simulation and verification stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("covariance matrix is not positive definite after jitter up to {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error bound {error_bound:e} after {evaluations} evaluations")]
    Quadrature {
        estimate: f64,
        error_bound: f64,
        evaluations: usize,
    },

    #[error("integral scheme does not cover path {path} at grid point {grid_index} (s = {value:?}): {reason}")]
    Coverage {
        path: usize,
        grid_index: usize,
        value: Vec<f64>,
        reason: String,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate samples: {0}")]
    Degenerate(String),

    #[error("well-posedness check failed: {0}")]
    WellPosedness(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
