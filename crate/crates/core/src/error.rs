use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, StegoError>;

#[derive(Debug, Error)]
pub enum StegoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path} is not a readable WAV file: {reason}")]
    NotWav { path: PathBuf, reason: String },

    #[error("unsupported audio encoding: {0} (expected 16-bit integer PCM)")]
    UnsupportedEncoding(String),

    #[error("sample-rate mismatch: expected {expected} Hz, found {found} Hz")]
    SampleRateMismatch { expected: u32, found: u32 },

    #[error("image error on {path}: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error("refusing lossy container format for {0}; use .png")]
    LossyFormat(PathBuf),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("channel mismatch: expected {expected} input channels, found {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate window normalization at sample {sample}")]
    DegenerateWindow { sample: usize },

    #[error("backward called without a recorded forward pass")]
    NoForwardPass,

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("weight file checksum failure")]
    Checksum,

    #[error("corrupt weight file: {0}")]
    CorruptWeights(String),

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("correlation undefined: constant sequence")]
    UndefinedCorrelation,

    #[error("payload too large: requires {required} bits, {available} available")]
    PayloadTooLarge { required: usize, available: usize },

    #[error("invalid LSB header: {0}")]
    InvalidHeader(String),

    #[error("audio of {samples} samples exceeds capacity of {capacity} samples")]
    CapacityExceeded { samples: usize, capacity: usize },

    #[error("pair {index}: {source}")]
    Pair {
        index: usize,
        #[source]
        source: Box<StegoError>,
    },

    #[error("{0}")]
    Usage(String),
}

impl StegoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        StegoError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        StegoError::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            StegoError::Usage(_) | StegoError::InvalidParams(_) => 1,
            StegoError::CapacityExceeded { .. } | StegoError::PayloadTooLarge { .. } => 3,
            StegoError::Pair { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
