use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("{entries} entries exceeds the dense cap of {cap}")]
    DimensionCap { entries: u128, cap: u128 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge")]
    EigenNonConvergence,

    #[error("power iteration did not converge after {0} iterations")]
    PowerIterationNonConvergence(usize),

    #[error("alternating optimisation did not converge after {0} sweeps")]
    SweepNonConvergence(usize),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("operation requires an explicit ensemble")]
    NotExplicit,

    #[error("exact Haar moments are only available up to degree 2 (requested {0})")]
    ExactDegree(usize),

    #[error("monomial is not balanced: degree ({conj}, {unconj})")]
    Unbalanced { conj: usize, unconj: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
