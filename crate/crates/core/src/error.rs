use thiserror::Error;

use crate::solver::Solution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("kernel evaluated at coincident points")]
    SingularEvaluation,

    #[error("degenerate triangle (zero area)")]
    DegenerateTriangle,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense assembly of {n} unknowns exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error(
        "GMRES did not converge: relative residual {:.3e} after {} iterations",
        .0.rel_residual,
        .0.iterations
    )]
    NotConverged(Box<Solution>),

    #[error("numerical breakdown: {0}")]
    Breakdown(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
