use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("signal truncated: edge amplitude ratio {edge_ratio:.3e} exceeds {threshold:.1e}")]
    Truncated { edge_ratio: f64, threshold: f64 },

    #[error("invalid interval: t_on ({t_on}) must be less than t_off ({t_off})")]
    InvalidInterval { t_on: f64, t_off: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("signal has zero energy, SNR is undefined")]
    ZeroEnergy,

    #[error("invalid physical units: {0}")]
    InvalidUnits(String),

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("spectral parameter must satisfy Im(lambda) >= 0, got {0}")]
    LowerHalfPlane(num_complex::Complex64),

    #[error("invalid eigenvalue: {0}")]
    InvalidEigenvalue(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("eigenvalue solver failed: {0}")]
    EigenSolver(String),

    #[error("io error")]
    Io(#[from] std::io::Error),

    #[error("json error")]
    Json(#[from] serde_json::Error),

    #[error("csv error")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
