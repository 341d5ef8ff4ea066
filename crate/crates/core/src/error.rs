use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^H| entry is {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigendecomposition did not converge")]
    NoConvergence,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("state is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("invalid analytic parameters: {0}")]
    InvalidParams(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
