//! Crate-wide error type.

use std::fmt;
use std::io;

#[derive(Debug)]
pub enum Error {
    Io(io::Error),
    /// Container or checkpoint magic bytes did not match.
    BadMagic,
    /// Payload ended before the header-declared size.
    Truncated(String),
    /// Malformed header or field content.
    Format(String),
    /// Tensor or signal dimensions do not match the declared geometry.
    Shape(String),
    /// Precondition violation on otherwise well-formed input.
    Invalid(String),
    /// Numerical failure (singular system, non-convergence, non-finite loss).
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "i/o error: {e}"),
            Self::BadMagic => write!(f, "bad magic bytes"),
            Self::Truncated(s) => write!(f, "truncated payload: {s}"),
            Self::Format(s) => write!(f, "format error: {s}"),
            Self::Shape(s) => write!(f, "shape error: {s}"),
            Self::Invalid(s) => write!(f, "invalid input: {s}"),
            Self::Numerical(s) => write!(f, "numerical failure: {s}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        if let Self::Io(e) = self {
            Some(e)
        } else {
            None
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
