use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("boundary node ({i}, {j}) at ({x:.5}, {y:.5}) is not covered by any admissible microdomain")]
    Coverage { i: usize, j: usize, x: f64, y: f64 },

    #[error("macro solver diverged at step {step}, node ({i}, {j}), field {field}")]
    MacroDivergence {
        step: usize,
        i: usize,
        j: usize,
        field: &'static str,
    },

    #[error("micro solver diverged on tile {tile} at step {step}")]
    MicroDivergence { tile: usize, step: usize },

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("malformed artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
