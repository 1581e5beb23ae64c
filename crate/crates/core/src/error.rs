use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{n_elements} elements cannot carry a periodic degree-{degree} basis (need at least {required})")]
    InsufficientElements {
        n_elements: usize,
        degree: usize,
        required: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    LinearNotConverged { iterations: usize, residual: f64 },

    #[error("nonlinear iteration did not converge at step {step} after {passes} passes (residual {residual:.3e}, initial {initial:.3e})")]
    NonlinearNotConverged {
        step: usize,
        passes: usize,
        residual: f64,
        initial: f64,
    },

    #[error("config line {line}: {message}")]
    ConfigLine { line: usize, message: String },

    #[error("missing required config key `{0}`")]
    MissingKey(String),

    #[error("invalid value for `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for problems with the user's configuration (as opposed to numerical failures).
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::ConfigLine { .. } | Error::MissingKey(_) | Error::ConfigValue { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
