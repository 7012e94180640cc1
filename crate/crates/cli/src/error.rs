use thiserror::Error;

/// Failures of a command, each with a fixed process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag values.
    #[error("usage error: {0}")]
    Usage(String),
    /// Unreadable, malformed or inconsistent problem file.
    #[error("input error: {0}")]
    Input(String),
    /// Results could not be written.
    #[error("output error: {0}")]
    Output(String),
    /// Numerical failure while processing valid input.
    #[error("computation failed: {0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 64,
            CliError::Failure(_) => 70,
            CliError::Output(_) => 74,
        }
    }
}
