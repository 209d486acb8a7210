use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

/// Errors returned by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method ran out of iterations. `best` is the last iterate.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    IterationLimit {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("wall-clock budget of {0:?} exceeded")]
    Timeout(Duration),

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failure: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
