use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical stages and the file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spatial index is empty")]
    EmptyIndex,

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("no pose pairs within {max_gap} s")]
    NoPairsFound { max_gap: f64 },

    #[error("no scale inliers")]
    NoInliers,

    #[error("only {found} correspondences within the distance gate (need at least 3)")]
    NoCorrespondences { found: usize },

    #[error("session {session} has no inter-session path to session 0")]
    DisconnectedGraph { session: usize },

    #[error("singular normal equations: {0}")]
    SingularSystem(String),

    #[error("missing optimized pose for session {session} frame {frame}")]
    MissingPose { session: usize, frame: usize },

    #[error("{path}: parse error: {msg}")]
    Parse { path: String, msg: String },

    #[error("{path}: missing vertex property `{property}`")]
    MissingProperty { path: String, property: String },

    #[error("{path}: timestamps not strictly increasing at line {line}")]
    NonMonotonicTimestamps { path: String, line: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by malformed or missing input data, as opposed
    /// to numerical breakdown inside a stage.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::MissingProperty { .. }
                | Error::NonMonotonicTimestamps { .. }
                | Error::Io { .. }
                | Error::InvalidArgument(_)
                | Error::EmptyCloud
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
