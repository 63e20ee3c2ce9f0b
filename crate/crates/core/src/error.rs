use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its invariant. `field` is a dotted path
    /// such as `params.p_max`.
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    /// A model equation is undefined at the given time point.
    #[error("at t = {t}: {message}")]
    Domain { t: f64, message: String },

    /// A Monte Carlo trial failed; the run is aborted.
    #[error("trial {trial_index}: {source}")]
    Trial {
        trial_index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Usage(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("calibration target {target} unreachable within search bounds; best residual {best_residual} at token_value_sd = {best_sd}, elasticity = {best_elasticity}")]
    Calibration {
        target: f64,
        best_residual: f64,
        best_sd: f64,
        best_elasticity: f64,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_trial(self, trial_index: u64) -> Self {
        Error::Trial {
            trial_index,
            source: Box::new(self),
        }
    }

    /// Prefixes the field path of a configuration error, e.g. `p_max` becomes `params.p_max`.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            Error::Config { field, message } => Error::Config {
                field: format!("{prefix}.{field}"),
                message,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
