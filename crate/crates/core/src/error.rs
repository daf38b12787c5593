use thiserror::Error;

/// Errors raised by the simulator, estimators and file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("malformed log at line {line}: {message}")]
    MalformedLog { line: usize, message: String },

    #[error("malformed table at line {line}: {message}")]
    MalformedTable { line: usize, message: String },

    #[error("estimator failure: {0}")]
    Estimator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
