use thiserror::Error;

/// Errors produced by parsing, model construction, and inference.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("reference model error: {0}")]
    Reference(String),

    #[error("emission evaluation failed at SNP index {index}: {message}")]
    Emission { index: usize, message: String },

    #[error("EM fitting error: {0}")]
    Em(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
