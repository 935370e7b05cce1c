use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("universe mismatch: expected {expected} processes, found {found}")]
    UniverseMismatch { expected: usize, found: usize },

    #[error("unknown process name `{0}`")]
    UnknownProcess(String),

    #[error("duplicate process name `{0}`")]
    DuplicateProcess(String),

    #[error("malformed expression: {0}")]
    MalformedExpression(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("schedule step {step} is not enabled: {detail}")]
    ScheduleStep { step: usize, detail: String },

    #[error("failed to read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
