//! Crate-wide error type.
//!
//! Variants are grouped by how the CLI reports them: configuration problems
//! exit with code 2, data problems with 3, numerical failures with 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // --- configuration ---
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config error: {0}")]
    Config(String),

    // --- data ---
    #[error("data error: {0}")]
    Data(String),

    #[error("column `{0}` not found")]
    UnknownColumn(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "sample too short: horizon {horizon} with {lags} lags leaves {rows} usable rows (need at least {need})"
    )]
    SampleTooShort {
        horizon: usize,
        lags: usize,
        rows: usize,
        need: usize,
    },

    #[error("state filter `{0}` matches no usable periods")]
    EmptyStateFilter(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    // --- numerical ---
    #[error("singular design: column `{column}` is linearly dependent on earlier columns")]
    SingularDesign { column: String },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("response is degenerate (min == max); nothing to fit")]
    DegenerateResponse,

    #[error("variance prior calibration failed: {0}")]
    Calibration(String),

    #[error("tree prior undefined: {0}")]
    InvalidTree(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Config(_) => 2,
            Error::Data(_)
            | Error::UnknownColumn(_)
            | Error::Dimension(_)
            | Error::SampleTooShort { .. }
            | Error::EmptyStateFilter(_)
            | Error::Io { .. } => 3,
            Error::SingularDesign { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::DegenerateResponse
            | Error::Calibration(_)
            | Error::InvalidTree(_)
            | Error::Numerical(_) => 4,
        }
    }
}
