use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Solver(#[from] ekcg::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("Matrix Market line {line}: {message}")]
    MatrixMarket { line: usize, message: String },
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
