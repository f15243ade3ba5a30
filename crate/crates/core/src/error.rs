use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown entity type `{0}`")]
    UnknownType(String),

    #[error("entity type `{0}` is already registered")]
    DuplicateType(String),

    #[error("unknown entity `{name}` of type `{type_name}`")]
    UnknownEntity { type_name: String, name: String },

    #[error("entity id {id} out of range for type `{type_name}` ({len} entities)")]
    IdOutOfRange { type_name: String, id: usize, len: usize },

    #[error("negative weight {weight} at cell ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, weight: f64 },

    #[error("non-finite weight at cell ({row}, {col})")]
    NonFiniteWeight { row: usize, col: usize },

    #[error("matrix has no positive entries")]
    EmptyMatrix,

    #[error("entity type `{0}` has no entities")]
    EmptyType(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("non-finite embedding value at iteration {iteration} for {type_name}:{entity}")]
    NonFinite { iteration: usize, type_name: String, entity: String },

    #[error("PMI undefined: cell ({row}, {col}) is zero")]
    ZeroCell { row: usize, col: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }
}
