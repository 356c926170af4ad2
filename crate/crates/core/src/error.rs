use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse profile: {0}")]
    ProfileParse(String),

    #[error("invalid profile at layer {index}: {reason}")]
    InvalidLayer { index: usize, reason: String },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("split point {split} outside 1..={max}")]
    SplitOutOfRange { split: usize, max: usize },

    #[error("invalid decision: {0}")]
    InvalidDecision(String),

    #[error("unreachable link: {what} of {bits} bits over a zero-rate {direction} link")]
    UnreachableLink {
        what: &'static str,
        bits: f64,
        direction: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty trace")]
    EmptyTrace,

    #[error("failed to write trace: {0}")]
    Trace(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
