use thiserror::Error;

/// Errors raised by the collatz-lab operations.
///
/// A step limit is never an error: trajectories that exhaust their budget
/// carry [`crate::Termination::StepLimit`] instead.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The input lies outside the domain of the map (zero, or an even value
    /// handed to an odd-only procedure).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The an+b parameters are unusable.
    #[error("invalid an+b parameters: {0}")]
    InvalidParams(String),

    /// The requested job exceeds the configured work budget.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("unsupported confidence level {0}")]
    UnsupportedLevel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
