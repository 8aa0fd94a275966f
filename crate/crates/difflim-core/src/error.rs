//! Library error type.
//!
//! Every fallible operation returns [`Result`]. Errors are constructive: the
//! message names the violated precondition and the offending value, so a
//! failed construction can be diagnosed without a debugger.

use std::fmt;

/// Errors produced by difflim-core operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument lies outside the mathematical domain of the
    /// operation (e.g. a negative `x` passed to `d_ell`).
    Domain(String),
    /// Two objects that must share a dimension do not.
    DimensionMismatch { expected: usize, got: usize },
    /// Two time series that must share a grid do not.
    GridMismatch(String),
    /// An operation that needs data received none.
    EmptyInput(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::GridMismatch(msg) => write!(f, "grid mismatch: {msg}"),
            Error::EmptyInput(msg) => write!(f, "empty input: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
