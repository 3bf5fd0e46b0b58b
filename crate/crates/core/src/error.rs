use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A mechanism or adversary broke the interaction contract.
    #[error("protocol violation: {0}")]
    Protocol(String),

    /// A configuration cannot be executed as given.
    #[error("configuration error: {0}")]
    Config(String),

    /// A malformed token in a dataset or query file.
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    /// A trial of an experiment failed; the experiment was aborted.
    #[error("trial {index}: {source}")]
    Trial { index: u64, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn protocol<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Protocol(msg.into()))
}
