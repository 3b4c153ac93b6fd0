use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("solver failed on leading {k}x{k} block: {source}")]
    Subgame {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("oracle limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("episode already finished")]
    EpisodeDone,

    #[error("trajectory mismatch: {0}")]
    Trajectory(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("run aborted: {0}")]
    Aborted(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
