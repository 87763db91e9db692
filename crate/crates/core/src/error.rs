//! Crate-wide error type.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// An argument violated a documented precondition.
    InvalidArgument(String),
    /// Input data violated a stream invariant (ordering, emptiness, shape).
    InvalidData(String),
    /// Tensor shape mismatch inside the autodiff engine or the model.
    Shape(String),
    /// Training diverged (non-finite loss persisted after sanitization).
    Divergence(String),
    /// Filesystem or serialization failure.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::InvalidData(m) => write!(f, "invalid data: {m}"),
            Error::Shape(m) => write!(f, "shape error: {m}"),
            Error::Divergence(m) => write!(f, "training diverged: {m}"),
            Error::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
