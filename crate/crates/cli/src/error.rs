use std::fmt;

use robin_spectra::Error;

/// Failure of a command, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files.
    Usage(String),
    /// A solve failed.
    Numerical(String),
    /// A mesh would exceed its node cap.
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::BudgetExceeded { .. } => CliError::Budget(msg),
            Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::NotClosed { .. }
            | Error::SelfIntersection { .. }
            | Error::Cusp { .. }
            | Error::NotAVertex { .. }
            | Error::InvalidMesh(_)
            | Error::UnknownBoundaryTag(_) => CliError::Usage(msg),
            _ => CliError::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
