//! Error type shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum CoreError {
    #[error("capability: {0}")]
    Capability(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("config: {0}")]
    Config(String),
    #[error("infinite type (or raise m_max): {0}")]
    InfiniteType(String),
    #[error("accuracy: {0}")]
    Accuracy(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
