use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite coordinate in point {index}")]
    NonFiniteCoordinate { index: usize },

    #[error("pointset is empty")]
    EmptyPointSet,

    #[error("self-loop on vertex {0} rejected")]
    SelfLoop(usize),

    #[error("vertex id {id} out of range for graph on {n} vertices")]
    VertexOutOfRange { id: usize, n: usize },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("record format error: {0}")]
    RecordFormat(String),

    #[error("record does not match its graph: {0}")]
    RecordMismatch(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
