use thiserror::Error;

#[derive(Debug, Error)]
pub enum TlError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("undefined state: {0}")]
    UndefinedState(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, TlError>;

pub(crate) fn domain(msg: impl Into<String>) -> TlError {
    TlError::Domain(msg.into())
}
