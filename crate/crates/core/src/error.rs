use thiserror::Error;

/// Errors surfaced by the simulator, the learning engine and the experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Counts, positions or dimensions are inconsistent with the configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A validated configuration field is out of range.
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    /// A raw action violated the decoder contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Non-finite values appeared during training.
    #[error("training error: {0}")]
    Training(String),

    #[error("oracle budget exceeded: {needed} candidates > cap {cap}")]
    OracleBudget { needed: u128, cap: u64 },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(expected: impl ToString, actual: impl ToString) -> Error {
    Error::Shape {
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
