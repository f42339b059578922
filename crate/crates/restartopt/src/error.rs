//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter derivation left the regime the guarantees cover,
    /// e.g. the requested accuracy makes the momentum parameter too large.
    #[error("parameter regime violated: {context} (theta = {theta}, admissible max {limit})")]
    Regime {
        context: &'static str,
        theta: f64,
        limit: f64,
    },

    /// An iterate or gradient coordinate became NaN or infinite.
    #[error("non-finite value produced during {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("observed value at ({row}, {col}) must be +1 or -1, got {value}")]
    InvalidSign { row: usize, col: usize, value: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate observation ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("observation index ({row}, {col}) out of range for {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("observation set must contain at least one entry")]
    EmptyObservations,

    #[error("trace length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("trace does not carry iterates; rerun with record_iterates enabled")]
    MissingIterates,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
