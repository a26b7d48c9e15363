use thiserror::Error;

/// Errors raised by the operators, solvers and harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible grids, truncations or parameter values.
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation received an input of the wrong kind.
    #[error("usage error: {0}")]
    Usage(String),
    /// A state violated a structural constraint (boundary rows, membership).
    #[error("consistency error: {0}")]
    Consistency(String),
    /// A time stepper produced a non-finite state.
    #[error("divergence at step {step}: {what}")]
    Divergence { step: usize, what: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
