use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: invalid metadata: {reason}", path.display())]
    Metadata { path: PathBuf, reason: String },

    #[error(
        "missing trial file for participant {participant}, gesture {gesture}, trial {trial}: {}",
        path.display()
    )]
    MissingTrial {
        participant: String,
        gesture: String,
        trial: usize,
        path: PathBuf,
    },

    #[error("{}: {reason}", path.display())]
    CorruptTrial { path: PathBuf, reason: String },

    #[error("{}: expected {expected} columns, found {found} (row {row})", path.display())]
    ColumnMismatch {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{}: non-finite sample at row {row}, channel {channel}", path.display())]
    NonFinite {
        path: PathBuf,
        row: usize,
        channel: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidSpec(String),

    #[error("channel index {index} out of range for {available} channels")]
    ChannelOutOfRange { index: usize, available: usize },

    #[error("channel selection is empty")]
    EmptySelection,

    #[error("recording has {samples} samples, shorter than one window of {window}")]
    RecordingTooShort { samples: usize, window: usize },

    #[error("frequency band [{low}, {high}) Hz lies outside (0, {nyquist}] Hz")]
    BandOutOfRange { low: f64, high: f64, nyquist: f64 },

    #[error("covariance of class (gesture {gesture}, user {user}) is singular")]
    SingularCovariance { gesture: String, user: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {needed} {what}, found {found}")]
    TooFew {
        what: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("empty {pool} score pool for user {user}")]
    EmptyPool { pool: &'static str, user: String },

    #[error("rank {k} outside 1..={users}")]
    RankOutOfRange { k: usize, users: usize },

    #[error("no model for gesture {gesture}, user {user}")]
    MissingModel { gesture: String, user: String },

    #[error("could not draw a stable AR signature after {attempts} attempts")]
    UnstableSignature { attempts: usize },

    #[error("no participant produced a usable {metric} value")]
    NoUsableParticipants { metric: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
