//! Crate-wide error type with CLI exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad field value, violated invariant).
    #[error("configuration error: {0}")]
    Config(String),
    /// Missing, corrupt, or mismatched data artifacts.
    #[error("data error: {0}")]
    Data(String),
    /// Dimension mismatch between tensors, parameters, or datasets.
    #[error("shape error: {0}")]
    Shape(String),
    /// Input that is structurally valid but degenerate (zero-energy
    /// sample, coincident geometry, empty objective).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Numerical failure (non-finite loss, diverged training).
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit status: 2 config, 3 data, 4 numeric. Usage errors (1)
    /// are produced by the argument parser before any `Error` exists.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Shape(_) | Error::Degenerate(_) | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
