use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("duplicate observation for {key}")]
    Duplicate { key: String },

    #[error("non-positive rate {value} at {key}")]
    NonPositiveRate { key: String, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient history: first usable decision date is t={first_usable}, requested t={requested}")]
    InsufficientHistory { first_usable: usize, requested: usize },

    #[error("look-ahead access: read of t={requested} while deciding for t={decision}")]
    Leakage { requested: usize, decision: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("backward pass requires a fresh forward pass")]
    TapeConsumed,

    #[error("schedule: {0}")]
    Schedule(String),

    #[error("training: {0}")]
    Training(String),

    #[error("refit k={k}, t={t}: {source}")]
    Stage {
        k: usize,
        t: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn at(self, k: usize, t: usize) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                k,
                t,
                source: Box::new(e),
            },
        }
    }
}
