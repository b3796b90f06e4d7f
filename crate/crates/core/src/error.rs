use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A statistic that cannot be formed from the data at hand.
///
/// These are data conditions, not programming errors: a constant forecast
/// column, a perfectly persistent observation series and so on.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Degenerate {
    #[error("{0} is constant, correlation is undefined")]
    ConstantSeries(&'static str),
    #[error("|gamma(h)| = 1, the reference forecast is perfect and skill is undefined")]
    PerfectReference,
    #[error("reference accuracy equals perfect accuracy, skill is undefined")]
    ReferenceEqualsPerfect,
    #[error("one-step persistence MAE is zero, MASE is undefined")]
    ZeroPersistenceError,
    #[error("normalizer must be positive, got {0}")]
    NonPositiveNormalizer(f64),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("timestamps are not strictly increasing at row {row}")]
    NonMonotonicTime { row: usize },
    #[error("no valid rows")]
    NoValidRows,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series of length {len} is too short, need at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Degenerate(#[from] Degenerate),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate(_))
    }
}
