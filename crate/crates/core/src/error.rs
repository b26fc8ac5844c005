use std::path::PathBuf;

/// Errors raised anywhere in the verification pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Shapes, lengths or hyperparameters that cannot work together.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input text. `location` is a 1-based line or row number.
    #[error("parse error at {what} {location}: {message}")]
    Parse {
        what: &'static str,
        location: usize,
        message: String,
    },

    #[error("feature error: {0}")]
    Feature(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("checkpoint version {found} is not supported (reader understands version {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse_line(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            what: "line",
            location: line,
            message: msg.into(),
        }
    }

    pub(crate) fn parse_row(row: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            what: "row",
            location: row,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
