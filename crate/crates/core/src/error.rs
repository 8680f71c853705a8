use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("particle weights of track {label} sum to {sum}, expected 1")]
    Unnormalized { label: String, sum: f64 },

    #[error("invalid track: {0}")]
    InvalidTrack(String),

    #[error("duplicate label {0} in LMB density")]
    DuplicateLabel(String),

    #[error("zero-norm vector has no direction")]
    ZeroNorm,

    #[error("scan for frame {got} arrived after frame {last}")]
    OutOfOrderFrame { last: u64, got: u64 },

    #[error(
        "association group of {tracks} tracks and {measurements} measurements exceeds \
         the exact enumeration limit ({max_tracks} tracks, {max_measurements} measurements)"
    )]
    GroupTooLarge {
        tracks: usize,
        measurements: usize,
        max_tracks: usize,
        max_measurements: usize,
    },

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("frame mismatch between truth and tracks; missing from tracks: {missing_in_tracks:?}, missing from truth: {missing_in_truth:?}")]
    FrameMismatch {
        missing_in_tracks: Vec<u64>,
        missing_in_truth: Vec<u64>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
