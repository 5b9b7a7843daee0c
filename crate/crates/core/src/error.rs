use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("singular matrix at row {row}")]
    Singular { row: usize },

    #[error("monotone iteration did not converge in {iterations} iterations (last change {last_change:e}, residual {residual:e})")]
    NotConverged {
        iterations: usize,
        last_change: f64,
        residual: f64,
    },

    #[error("monotonicity broke down at iteration {iteration}: increase {excess:e} at {point}")]
    MonotonicityBreakdown {
        iteration: usize,
        excess: f64,
        point: String,
    },

    #[error("Newton iteration failed after {iterations} iterations: {reason} (residual {residual:e})")]
    Newton {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("nested solutions are out of order between radii {inner} and {outer}: excess {excess:e}")]
    ChainViolation { inner: u64, outer: u64, excess: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
