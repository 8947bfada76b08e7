use thiserror::Error;

use crate::mesh::ElementId;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown element id {0}")]
    UnknownElement(ElementId),

    #[error("system was assembled for mesh generation {system}, but the old mesh has generation {mesh}")]
    StampMismatch { system: u64, mesh: u64 },

    #[error("matrix is numerically singular: pivot {index} has magnitude {magnitude:e}")]
    Singular { index: usize, magnitude: f64 },

    #[error("zero increment between consecutive energies at index {0}")]
    ZeroIncrement(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
