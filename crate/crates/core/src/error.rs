//! Error type shared across the crate.

use std::fmt;
use std::path::PathBuf;

/// Errors produced by construction, numeric updates, and I/O.
#[derive(Debug)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    InvalidArgument(String),
    /// A matrix factorization or normalization broke down (e.g. a covariance
    /// that is no longer positive definite). Signals a broken invariant
    /// upstream rather than a caller mistake.
    Degenerate(String),
    /// A numeric update produced a non-finite intermediate; the message names
    /// the offending quantity.
    Divergence(String),
    /// File I/O failed; carries the path for context.
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Degenerate(msg) => write!(f, "numerical degeneracy: {msg}"),
            Error::Divergence(msg) => write!(f, "numerical divergence: {msg}"),
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn divergence(msg: impl Into<String>) -> Self {
        Error::Divergence(msg.into())
    }
}
