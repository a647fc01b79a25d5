use std::path::PathBuf;

use ssp_mdrk::analysis::AnalysisError;
use ssp_mdrk::problems::ProblemError;
use ssp_mdrk::tableau::TableauParseError;
use thiserror::Error;

/// Exit code for a numerical failure (a run or study did not complete).
pub const EXIT_NUMERICAL: u8 = 1;
/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("tableau file {path}: {source}")]
    Tableau {
        path: PathBuf,
        #[source]
        source: TableauParseError,
    },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidArgument(m) | AnalysisError::Hypothesis(m) => CliError::Usage(m),
            AnalysisError::Problem(p) => CliError::Problem(p),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
