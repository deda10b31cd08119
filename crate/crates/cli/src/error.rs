use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent input.
    #[error("{0}")]
    Input(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Invariant(_) => ExitCode::from(3),
            CliError::Other(_) => ExitCode::from(1),
        }
    }
}

impl From<eu_core::Error> for CliError {
    fn from(e: eu_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<eu_core::error::IngestError> for CliError {
    fn from(e: eu_core::error::IngestError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<eu_core::error::EmbedError> for CliError {
    fn from(e: eu_core::error::EmbedError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<eu_core::error::EvalError> for CliError {
    fn from(e: eu_core::error::EvalError) -> Self {
        CliError::Input(e.to_string())
    }
}
