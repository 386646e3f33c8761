use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (bad `k`, invalid
    /// grid step, logarithm of a nonpositive quantity, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The input carries no usable signal (all-zero matrix, constant column, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Matrix dimensions do not agree with what the operation requires.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A value that must be finite was NaN or infinite.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("SVD did not converge within {sweeps} sweeps")]
    Convergence { sweeps: usize },

    /// Malformed tabular input. Coordinates are 1-based data row and column.
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    /// Too few rows (or columns) to carry out the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True when the failure stems from the data rather than from numerical
    /// arguments. Front ends use this to pick an exit status.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Degenerate(_)
                | Error::Shape(_)
                | Error::NonFinite { .. }
                | Error::Parse { .. }
                | Error::InsufficientData(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
