use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A series or expectation that does not exist for the given input.
    #[error("divergent: {0}")]
    Divergence(String),

    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input too large for an exact enumeration.
    #[error("size limit exceeded: {0}")]
    Size(String),

    /// Floating-point cancellation exceeded the accepted loss.
    #[error("precision loss: {0}")]
    Precision(String),

    #[error("too many censored trials: {censored} of {trials} exceed the horizon (limit {limit})")]
    Censoring {
        censored: usize,
        trials: usize,
        limit: usize,
    },

    #[error("distribution has no power tail at 1: {0}")]
    NoPowerTail(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Size(_) | Error::NoPowerTail(_) => 2,
            Error::Divergence(_) => 3,
            Error::Precision(_) | Error::Censoring { .. } => 4,
            Error::Io { .. } => 1,
        }
    }

    pub(crate) fn divergence(msg: impl Into<String>) -> Self {
        Error::Divergence(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
