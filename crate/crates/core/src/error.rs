use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: expected {expected}, got {actual}")]
    InputShape { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    /// CSV / schema loading failure. `line` is 1-based and counts the header.
    #[error("{path}:{line}: {message}")]
    Load {
        path: String,
        line: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("session state error: {0}")]
    State(String),

    #[error("feature {feature} costs {cost} but only {remaining} of the budget remains")]
    Budget {
        feature: usize,
        cost: f64,
        remaining: f64,
    },

    #[error("model/schema mismatch: {0}")]
    ModelMismatch(String),

    #[error("curve error: {0}")]
    Curve(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier, used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InputShape { .. } => "input_shape",
            Error::Argument(_) => "argument",
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::Load { .. } => "load",
            Error::Format(_) => "format",
            Error::Training { .. } => "training",
            Error::Schema(_) => "schema",
            Error::Split(_) => "split",
            Error::State(_) => "state",
            Error::Budget { .. } => "budget",
            Error::ModelMismatch(_) => "model_mismatch",
            Error::Curve(_) => "curve",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
