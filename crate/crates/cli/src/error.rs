//! Harness errors and their process exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{0}")]
    Core(#[from] scope_core::Error),
    #[error("gradient check failed for {0}")]
    GradCheck(String),
    #[error("{failed} of {total} pairs could not be evaluated")]
    PartialEval { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Documented in `scope --help`; keep the two in sync.
pub const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (bad flags or arguments)
  3  invalid configuration value or unknown key
  4  file system error
  5  malformed or unsupported input data
  6  missing or inconsistent dataset
  7  checkpoint incompatible with the configuration
  8  gradient check exceeded tolerance
  9  evaluation finished but some pairs failed";

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use scope_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Core(E::Io(_)) => 4,
            CliError::Core(E::InvalidConfig(_) | E::NonDivisiblePatch { .. }) => 3,
            CliError::Core(E::Checkpoint(_)) => 7,
            CliError::Core(_) => 5,
            CliError::Dataset(_) => 6,
            CliError::Checkpoint(_) => 7,
            CliError::GradCheck(_) => 8,
            CliError::PartialEval { .. } => 9,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
