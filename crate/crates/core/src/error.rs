//! Error and result types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between raw records and metrics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("trajectory `{id}`: {reason}")]
    InvalidTrajectory { id: String, reason: String },

    #[error("{name} = {value} out of range [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("trajectory entirely outside the bounding radius")]
    OutsideBound,

    #[error("time span too short to resample onto a 1 Hz grid")]
    SpanTooShort,

    #[error("trajectory too noisy: {flagged} of {total} states failed the speed check")]
    TooNoisy { flagged: usize, total: usize },

    #[error("no flights survived preprocessing")]
    NoSurvivors,

    #[error("trajectory has {len} states, at least 2 required")]
    TooShort { len: usize },

    #[error("stationary trajectory: no displacement at any step")]
    Stationary,

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("expected a scalar, got shape {shape:?}")]
    NonScalar { shape: Vec<usize> },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("degenerate batch: no anchor has both a positive and a negative")]
    DegenerateBatch,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Convenience constructor for parameter validation failures.
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    /// Convenience constructor for file-format violations.
    pub fn format(reason: impl Into<String>) -> Self {
        Error::Format(reason.into())
    }
}
