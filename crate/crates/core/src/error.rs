use thiserror::Error;

/// Errors raised by the simulator.
///
/// Each variant maps onto one failure class; [`Error::name`] gives the stable
/// identifier the CLI prints next to its exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate probe: superposition norm {0:e} before normalization")]
    DegenerateProbe(f64),

    #[error("numerical error: {0}")]
    NumericalError(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("singular QFIM: {0}")]
    SingularQfim(String),

    #[error("experiment failed: {0}")]
    ExperimentFailed(String),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::DegenerateProbe(_) => "DegenerateProbe",
            Error::NumericalError(_) => "NumericalError",
            Error::AssumptionViolated(_) => "AssumptionViolated",
            Error::SingularQfim(_) => "SingularQfim",
            Error::ExperimentFailed(_) => "ExperimentFailed",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
