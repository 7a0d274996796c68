use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signature: {0}")]
    Signature(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {message}")]
    Numerical { message: String, residuals: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("calibration failure: {0}")]
    Calibration(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("construction aborted at step {step}: {reason}")]
    Aborted { step: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
