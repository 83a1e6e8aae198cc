use std::process::ExitCode;

use dicke_metrology::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("{}: {}", .0.name(), .0)]
    Core(#[from] Error),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("VerificationFailed: {0} check(s) failed")]
    Verification(usize),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) | CliError::Core(Error::InvalidArgument(_)) => 2,
            CliError::Core(Error::AssumptionViolated(_)) => 4,
            CliError::Core(_) | CliError::Verification(_) => 3,
            CliError::Io(_) => 1,
        })
    }
}
