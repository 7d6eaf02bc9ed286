use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("triangle {index} is degenerate or clockwise (signed area {area:e})")]
    DegenerateElement { index: usize, area: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time {t} outside forcing window [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("singular matrix (pivot {pivot:e} at row {row})")]
    Singular { row: usize, pivot: f64 },

    #[error("Krylov solver did not converge in {iterations} iterations (best relative residual {best_residual:e})")]
    KrylovNotConverged { iterations: usize, best_residual: f64 },

    #[error("Picard iteration did not converge in {} iterations (last increment {:e})", increments.len(), increments.last().copied().unwrap_or(f64::NAN))]
    PicardNotConverged { increments: Vec<f64> },

    #[error("regime violation: {0}")]
    Regime(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the user's configuration or input files rather than by a solver.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidMesh(_)
                | Error::DegenerateElement { .. }
                | Error::MeshMismatch(_)
                | Error::Config(_)
                | Error::Parse { .. }
                | Error::Io(_)
        )
    }
}
