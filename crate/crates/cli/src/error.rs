use std::path::Path;

use thiserror::Error;
use tokencycle_core::scenario::ScenarioError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const MISSING_INPUT: i32 = 2;
    pub const INVALID_CONFIG: i32 = 3;
    pub const IO: i32 = 4;
    pub const RUN_FAILURE: i32 = 5;
    pub const CALIBRATION: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing input {path}: {source}")]
    MissingInput {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("run failed: {0}")]
    Run(tokencycle_core::Error),
    #[error("calibration failed: {0}")]
    Calibration(tokencycle_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn missing(path: &Path, source: std::io::Error) -> Self {
        CliError::MissingInput {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::MissingInput { .. } => exit::MISSING_INPUT,
            CliError::Invalid(_) => exit::INVALID_CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::Run(_) => exit::RUN_FAILURE,
            CliError::Calibration(_) => exit::CALIBRATION,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(err: ScenarioError) -> Self {
        match err {
            ScenarioError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::missing(&path, source)
            }
            ScenarioError::Io { path, source } => CliError::io(&path, source),
            invalid @ ScenarioError::Invalid { .. } => CliError::Invalid(invalid.to_string()),
        }
    }
}

impl From<tokencycle_core::Error> for CliError {
    fn from(err: tokencycle_core::Error) -> Self {
        use tokencycle_core::Error as E;
        match err {
            E::Config { .. } | E::Usage(_) => CliError::Invalid(err.to_string()),
            E::Calibration { .. } => CliError::Calibration(err),
            E::Domain { .. } | E::Trial { .. } | E::Numeric(_) => CliError::Run(err),
        }
    }
}
