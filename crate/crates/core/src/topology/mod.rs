//! Reservoir matrices: connectome-derived connectivity matrices built from
//! edge-list exports, and seeded random control reservoirs.

use std::path::PathBuf;

use thiserror::Error;

use crate::error::ErrorCategory;

mod edge_list;
#[cfg(feature = "fetch")]
mod fetch;
mod io;
mod matrix;
mod random;

pub use edge_list::{parse_edge_list, EdgeList, EdgeRecord, EDGE_LIST_HEADER};
#[cfg(feature = "fetch")]
pub use fetch::{fetch_edge_list, parse_cypher_table, FetchRequest};
pub use io::{
    matrix_paths, matrix_prefix, read_matrix_csv, read_matrix_files, write_matrix_csv,
    write_matrix_files, MatrixMeta,
};
pub use matrix::{
    build_connectivity_matrix, content_hash, format_hash, matrix_stats, parse_hash, MatrixStats,
    ReservoirKind, ReservoirMatrix,
};
pub use random::random_reservoir;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("edge list is empty")]
    EmptyInput,
    #[error("{0}")]
    InvalidParameter(String),
    #[error("matrix content hash mismatch: meta says {expected}, values hash to {actual}")]
    HashMismatch { expected: String, actual: String },
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

impl TopologyError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            TopologyError::Parse { .. }
            | TopologyError::Validation { .. }
            | TopologyError::EmptyInput
            | TopologyError::HashMismatch { .. } => ErrorCategory::Parse,
            TopologyError::InvalidParameter(_) => ErrorCategory::InvalidConfig,
            TopologyError::File { .. } | TopologyError::Io(_) => ErrorCategory::Io,
            TopologyError::Auth(_)
            | TopologyError::Transport(_)
            | TopologyError::MalformedResponse(_) => ErrorCategory::Network,
        }
    }
}
