use thiserror::Error;

/// Errors produced by the indicator pipeline.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Malformed input syntax (bad JSON, unparseable field value).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structurally valid input missing a required field.
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    /// Well-formed input violating a value constraint.
    #[error("validation error at line {line}: {message}")]
    Validation { line: usize, message: String },

    /// Invalid configuration (window bounds, thresholds, scenario parameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called outside its contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// No data matched the request (e.g. no mobility events in scope).
    #[error("{0}")]
    Empty(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed {format} input: {message}")]
    Format { format: String, message: String },
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub(crate) fn format(format: &str, message: impl Into<String>) -> Self {
        CoreError::Format {
            format: format.to_string(),
            message: message.into(),
        }
    }
}
