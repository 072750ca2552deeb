use rdme_core::model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or incomplete configuration or model file.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("compile error: {0}")]
    Compile(#[from] ModelError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("run error: {0}")]
    Run(String),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compile(_) => 3,
            CliError::Io(_) | CliError::Run(_) => 1,
        }
    }
}

/// Exit code of a completed run whose results were flagged unreliable.
pub const EXIT_UNRELIABLE: i32 = 4;
