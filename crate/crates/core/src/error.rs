use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A negative radicand or similar numeric breakdown outside rounding tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Information matrix entry diverges (e.g. QFI at N_t = 0).
    #[error("pole at {0}")]
    Pole(String),

    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),

    #[error("matrix not invertible (det = {det:e})")]
    NotInvertible { det: f64 },

    #[error("basis mismatch: matrix is in {found}, transfer expects {expected}")]
    BasisMismatch { expected: String, found: String },

    #[error("inconsistent variances: {0}")]
    Inconsistent(String),

    #[error("degenerate samples: {0}")]
    Degenerate(String),

    #[error("Monte Carlo rejection rate {rate:.4} exceeds limit {limit:.4}")]
    RejectionRate { rate: f64, limit: f64 },

    #[error("posterior grid too narrow: {0}")]
    GridCoverage(String),

    #[error("{path}: malformed row {row}: {reason}")]
    MalformedRow {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("unsupported format version {found:?} (expected {expected:?})")]
    FormatVersion { expected: String, found: String },

    #[error("schema check failed for {path}: {reason}")]
    Schema { path: PathBuf, reason: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
