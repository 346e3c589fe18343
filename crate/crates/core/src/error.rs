use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("observation {x:?} lies outside the data support ({support})")]
    OutsideSupport { x: Vec<f64>, support: String },

    #[error("parameter {theta:?} lies outside the parameter domain")]
    OutsideParamDomain { theta: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation region has negligible mass (< 1e-12) in coordinates {coords:?}")]
    NegligibleTruncationMass { coords: Vec<usize> },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("all predictive densities vanish at t={t} for x={x:?}")]
    ZeroDensity { t: usize, x: Vec<f64> },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("csv error at row {row} (line {line}), column {column}: {message}")]
    CsvCell {
        row: usize,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
