use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: u64, msg: String },

    #[error("overlapping enrollment spans for member {member_id}")]
    OverlappingSpans { member_id: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("training data contains a single class; use the base rate ({base_rate}) instead of a model")]
    SingleClass { base_rate: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} scores vs {right} labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("feature schema mismatch: model expects {expected}, got {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn parse(file: impl Into<String>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io(path.into(), err)
    }
}
