use std::path::PathBuf;

use thiserror::Error;

use dolab::dynamics::RunError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LEGALITY: i32 = 3;
pub const EXIT_PREDICATE: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("no trace files in {0}")]
    MissingTraces(PathBuf),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{0}")]
    Predicate(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::MissingTraces(_) => EXIT_IO,
            CliError::Run(e) => run_exit_code(e),
            CliError::Predicate(_) => EXIT_PREDICATE,
        }
    }
}

pub fn run_exit_code(e: &RunError) -> i32 {
    match e {
        _ if e.is_legality_failure() => EXIT_LEGALITY,
        RunError::UniquenessViolation { .. } => EXIT_PREDICATE,
        RunError::InvalidConfig(_) => EXIT_USAGE,
        _ => EXIT_OTHER,
    }
}
