use std::fmt;
use std::io;

use crate::model::Dim3;

/// Errors produced across the optimisation pipeline.
#[derive(Debug)]
pub enum Error {
    /// Invalid configuration or inconsistent inputs.
    Config(String),
    /// Malformed input record.
    Parse { line: usize, message: String },
    /// Index outside the valid range.
    Index { index: usize, bound: usize },
    /// Corrupt or truncated binary file.
    Format { offset: u64, message: String },
    /// A packing unit has no available box that fits it.
    Infeasible { unit: usize },
    /// The fit oracle contradicted monotonicity.
    NonMonotone { fits: Dim3, unfit: Dim3 },
    /// Problem too large for the requested method.
    Size(String),
    /// External solver failure.
    Backend(String),
    /// Value outside the domain of a function.
    Domain(String),
    Io(io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::Index { index, bound } => {
                write!(f, "index {index} out of range (bound {bound})")
            }
            Error::Format { offset, message } => {
                write!(f, "format error at byte offset {offset}: {message}")
            }
            Error::Infeasible { unit } => {
                write!(f, "packing unit {unit} has no available fitting box")
            }
            Error::NonMonotone { fits, unfit } => write!(
                f,
                "non-monotone oracle: fits into {fits} but not into larger {unfit}"
            ),
            Error::Size(msg) => write!(f, "problem too large: {msg}"),
            Error::Backend(msg) => write!(f, "solver backend error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Io(err)
    }
}
