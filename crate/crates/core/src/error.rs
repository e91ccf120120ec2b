use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("operation requires a watertight mesh")]
    NotWatertight,

    #[error("SDF grid of {requested} voxels exceeds the budget of {budget}")]
    VoxelBudget { requested: u64, budget: u64 },

    #[error("invalid SDF file: {0}")]
    SdfFormat(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("missing field `{field}` for task {task}")]
    MissingField { task: &'static str, field: &'static str },

    #[error("plant diverged at step {step}: |position| = {norm:.3} m")]
    Diverged { step: usize, norm: f64 },

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
