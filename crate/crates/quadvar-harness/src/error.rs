use thiserror::Error;

/// Process exit codes: 0 success, 2 configuration/validation error,
/// 3 numerical failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    ConfigError = 2,
    NumericalFailure = 3,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            HarnessError::Config(_) => ExitCode::ConfigError,
            HarnessError::Numerical(_) => ExitCode::NumericalFailure,
            HarnessError::Io(_) => ExitCode::NumericalFailure,
        }
    }

    /// Classify a library error: invariant/parameter problems are
    /// configuration errors, runtime numerics are numerical failures.
    pub fn from_lib(e: quadvar::Error) -> Self {
        use quadvar::Error as E;
        match e {
            E::InvalidParams(_) | E::Domain { .. } | E::OrderTooSmall { .. } => {
                HarnessError::Config(e.to_string())
            }
            other => HarnessError::Numerical(other.to_string()),
        }
    }
}

pub type HarnessResult<T> = Result<T, HarnessError>;

pub fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

pub fn numerical_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Numerical(msg.into())
}
