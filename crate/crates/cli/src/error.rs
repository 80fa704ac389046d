use thiserror::Error;

/// Failures of a command, each with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Engine(#[from] parisian::Error),
    #[error("{0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn io(context: impl std::fmt::Display, err: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }

    /// 1 verification failure, 2 invalid input, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Engine(e) if e.is_input_error() => 2,
            CliError::Engine(_) => 3,
        }
    }
}
