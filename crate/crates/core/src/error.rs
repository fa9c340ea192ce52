use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series length {length} exceeds target length {target}")]
    LengthExceedsTarget { length: usize, target: usize },

    #[error("annotation is empty")]
    EmptyAnnotation,

    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),

    #[error("timestamp {timestamp} out of range for length {length}")]
    TimestampOutOfRange { timestamp: usize, length: usize },

    #[error("state id {state} out of range for {num_states} states")]
    StateOutOfRange { state: usize, num_states: usize },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("segment [{start}, {end}) too short: minimum size is {min_size}")]
    SegmentTooShort {
        start: usize,
        end: usize,
        min_size: usize,
    },

    #[error("signal of length {length} too short: need at least {required}")]
    SignalTooShort { length: usize, required: usize },

    #[error("signal of length {length} shorter than window {width}")]
    SignalShorterThanWindow { length: usize, width: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("every position is masked")]
    AllMasked,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("channel mismatch: model expects {expected} channels, series has {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("series of length {length} shorter than window {width}")]
    SeriesShorterThanWindow { length: usize, width: usize },

    #[error("ridge classifier needs at least two classes, found {0}")]
    SingleClass(usize),

    #[error("feature width mismatch: model expects {expected}, got {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("tolerance must be positive, got {0} samples")]
    NonPositiveTolerance(i64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid flight plan: {0}")]
    InvalidPlan(String),

    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
