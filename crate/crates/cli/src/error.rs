use std::fmt;
use std::io;
use std::process::ExitCode;

/// How a run ended. Maps onto the exit-code contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// A step budget ran out or a search was inconclusive.
    Inconclusive,
    /// A work budget was hit; a partial report was written.
    ResourceLimited,
    /// A verification found a counterexample.
    CheckFailed,
}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;
pub const EXIT_CHECK_FAILED: u8 = 4;

impl Status {
    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Status::Success => 0,
            Status::Inconclusive => EXIT_INCONCLUSIVE,
            Status::ResourceLimited => EXIT_RESOURCE,
            Status::CheckFailed => EXIT_CHECK_FAILED,
        })
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Resource(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Resource(_) => EXIT_RESOURCE,
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Resource(m) => f.write_str(m),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<collatz_lab::Error> for CliError {
    fn from(e: collatz_lab::Error) -> Self {
        match e {
            collatz_lab::Error::Resource(m) => CliError::Resource(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

pub type CliResult = Result<Status, CliError>;
