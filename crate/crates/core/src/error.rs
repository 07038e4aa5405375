use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {dim}")]
    NonSquare { row: usize, len: usize, dim: usize },

    #[error("matrix must have at least one row")]
    EmptyMatrix,

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {deviation:e} exceeds tolerance {tolerance:e}")]
    Asymmetric { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive semi-definite: min eigenvalue {min:e} vs max {max:e}")]
    NotPsd { min: f64, max: f64 },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("{0}")]
    Domain(String),

    #[error("relative error needs a positive trace, got {0}")]
    NonPositiveTrace(f64),

    #[error("trace is unknown for this operator; supply a trace hint")]
    UnknownTrace,

    #[error("sub-gamma sum over an empty list")]
    EmptyList,

    #[error("series term overflowed at order {order}")]
    Overflow { order: u32 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported Matrix Market field: {0}")]
    UnsupportedField(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters, violated preconditions, numerical failures.
    Domain,
    /// File system and format problems.
    Input,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. }
            | Error::UnsupportedField(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => ErrorKind::Input,
            _ => ErrorKind::Domain,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
