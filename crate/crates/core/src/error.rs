use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("method {method} has no observed scores")]
    EmptyRow { method: usize },

    #[error("pair ({method}, {example}) was already observed")]
    DuplicateObservation { method: usize, example: usize },

    #[error("score {value} at ({method}, {example}) is outside [0, 1]")]
    ScoreRange {
        method: usize,
        example: usize,
        value: f64,
    },

    #[error("index ({method}, {example}) is outside a {rows}x{cols} matrix")]
    IndexOutOfRange {
        method: usize,
        example: usize,
        rows: usize,
        cols: usize,
    },

    #[error("every method-example pair has already been observed")]
    Exhausted,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error in {path} at row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: score {value} for method {method:?}, example {example:?} is outside [0, 1]")]
    CellRange {
        path: PathBuf,
        method: String,
        example: String,
        value: f64,
    },

    #[error("ragged matrix in {path}: row {row} has {found} cells, expected {expected}")]
    Ragged {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("factorization support is empty")]
    DegenerateFactorization,

    #[error("all methods have identical mean score")]
    DegenerateHardness,

    #[error("remote scoring failed for ({method}, {example}) after {attempts} attempts: {message}")]
    Remote {
        method: usize,
        example: usize,
        attempts: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
