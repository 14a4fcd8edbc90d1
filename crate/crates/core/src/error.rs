use std::path::PathBuf;

use thiserror::Error;

use crate::esn::EsnError;
use crate::experiment::ExperimentError;
use crate::mackey_glass::MgError;
use crate::report::ReportError;
use crate::topology::TopologyError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes; each maps to a distinct process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    InvalidConfig,
    Io,
    Parse,
    Numerical,
    SearchFailure,
    Statistics,
    Network,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::InvalidConfig => 2,
            ErrorCategory::Io => 3,
            ErrorCategory::Parse => 4,
            ErrorCategory::Numerical => 5,
            ErrorCategory::SearchFailure => 6,
            ErrorCategory::Statistics => 7,
            ErrorCategory::Network => 8,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    MackeyGlass(#[from] MgError),
    #[error(transparent)]
    Esn(#[from] EsnError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::MackeyGlass(e) => e.category(),
            Error::Esn(e) => e.category(),
            Error::Topology(e) => e.category(),
            Error::Experiment(e) => e.category(),
            Error::Report(e) => e.category(),
            Error::Config(_) => ErrorCategory::InvalidConfig,
            Error::Io { .. } => ErrorCategory::Io,
            Error::Parse { .. } => ErrorCategory::Parse,
        }
    }
}
