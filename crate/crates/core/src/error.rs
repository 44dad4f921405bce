//! Error type shared by every estimator in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by signal ingestion, validation, and the estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed row at line {line}: {detail}")]
    MalformedRow { line: usize, detail: String },

    #[error("time axis not strictly increasing at row {row}")]
    NonMonotoneTime { row: usize },

    #[error("non-finite value at row {row}")]
    NonFiniteValue { row: usize },

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("value {value} at index {index} outside grid [{lo}, {hi}]")]
    OutOfGrid {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("sampling not uniform: {0}")]
    NonUniformSampling(String),

    #[error("segment length {segment} exceeds series length {len}")]
    SegmentTooLong { segment: usize, len: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("rainflow matrix has zero total count")]
    EmptyMatrix,

    #[error("index {idx} out of range for series of length {len}")]
    IndexOutOfRange { idx: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Classifies the error for process exit codes: data-shaped problems
    /// (bad files, malformed rows, range violations) versus numeric/domain
    /// problems (degenerate signals, invalid math inputs).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::MalformedRow { .. }
                | Error::NonMonotoneTime { .. }
                | Error::NonFiniteValue { .. }
                | Error::TooFewSamples { .. }
                | Error::OutOfGrid { .. }
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Empty(_)
                | Error::IndexOutOfRange { .. }
        )
    }
}
