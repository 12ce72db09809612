use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("signal too short: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),

    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),

    #[error("source count mismatch: {estimates} estimates vs {references} references")]
    CountMismatch { estimates: usize, references: usize },

    #[error("reference signal is identically zero")]
    ZeroReference,

    #[error("partial {index} at {frequency:.3} Hz is at or above Nyquist ({nyquist} Hz)")]
    AboveNyquist { index: usize, frequency: f64, nyquist: f64 },

    #[error("could not draw an order-preserving jitter profile in {0} attempts")]
    JitterRejected(usize),

    #[error("f0 track has {track} frames but the signal implies {expected}")]
    TrackMismatch { track: usize, expected: usize },

    #[error("references do not sum to the mixture (residual rms {0:.3e})")]
    NotAdditive(f64),

    #[error("unsupported audio format in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("external separator: {0}")]
    External(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the environment (files, processes) rather than of the inputs.
    pub fn is_environmental(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::External(_))
    }
}
