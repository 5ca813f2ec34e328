//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by parsing, operator assembly, and evaluation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside a function's mathematical domain (gamma of a
    /// non-positive argument, log of a negative number, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Expression syntax error; `offset` is a byte offset into the source.
    #[error("syntax error at offset {offset}: {msg}")]
    Syntax { offset: usize, msg: String },

    /// Argument-vector length does not match an expression's arity.
    #[error("arity mismatch: expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },

    /// Vector/matrix/grid sizes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Violated precondition or otherwise invalid request.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Problem-file diagnostic with a 1-based line number.
    #[error("{path}:{line}: {msg}")]
    ProblemFile {
        path: String,
        line: usize,
        msg: String,
    },

    /// Filesystem failure while reading or writing CLI artifacts.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
