use thiserror::Error;

/// Errors raised by the solver and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} samples but the grid holds {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("fields live on incompatible grids")]
    GridMismatch,

    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficient lower bound violated at z = {z}, tau = {tau}: min c = {min} < c0 = {c0}")]
    LowerBound { z: f64, tau: f64, min: f64, c0: f64 },

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error(
        "Krylov solver stalled after {iterations} iterations (relative residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("depth {z} is not aligned with the macro mesh (step {step})")]
    Misaligned { z: f64, step: f64 },

    #[error("synthesis aborted: {} frequency solve(s) failed", failures.len())]
    PartialFailure { failures: Vec<(f64, String)> },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
