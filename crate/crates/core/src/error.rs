use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SkewError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SkewError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV input: {0}")]
    Csv(#[from] csv::Error),

    #[error("non-numeric value {value:?} at row {row}, column {column}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("duplicate column label {0:?}")]
    DuplicateLabel(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("invalid selection {spec:?}: {reason}")]
    BadSelection { spec: String, reason: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Covariance (or another SPD input) is numerically singular. `direction`
    /// is the eigenvector of the smallest eigenvalue.
    #[error("singular covariance matrix: eigenvalue {eigenvalue:e} along direction {direction:?}")]
    Singular { eigenvalue: f64, direction: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    /// A caller-supplied argument violates an operation's precondition.
    #[error("{0}")]
    Precondition(String),

    #[error("bootstrap replicate {replicate}: resample covariance stayed singular after {attempts} draws")]
    RedrawExhausted { replicate: usize, attempts: usize },
}

impl SkewError {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        SkewError::Precondition(msg.into())
    }

    pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Self {
        SkewError::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for errors caused by how the operation was invoked rather than by
    /// the numbers in the data.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            SkewError::Precondition(_) | SkewError::BadSelection { .. } | SkewError::EmptySelection(_)
        )
    }
}
