//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerscenError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}:{line}: parse error: {msg}")]
    Parse { path: String, line: u64, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: String,
        expected: String,
        got: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("non-finite values in parameter block '{0}'")]
    NonFinite(String),
}

impl PerscenError {
    pub fn validation(msg: impl Into<String>) -> Self {
        PerscenError::Validation(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        PerscenError::Config(msg.into())
    }

    pub fn shape(context: &str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        PerscenError::Shape {
            context: context.to_string(),
            expected: expected.into(),
            got: got.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, PerscenError>;
