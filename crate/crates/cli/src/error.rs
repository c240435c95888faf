use std::process::ExitCode;

/// Failures surfaced to the command line, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments, unreadable inputs, unknown names.
    #[error("{0}")]
    Config(String),
    /// A solver produced something unusable (non-finite values, collapsed clusters).
    #[error("{0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Io(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
        }
    }
}

impl From<itisc::Error> for CliError {
    fn from(e: itisc::Error) -> Self {
        use itisc::Error as E;
        match e {
            E::DegenerateCluster { .. } => CliError::Numerical(e.to_string()),
            E::Io(io) => CliError::Io(io),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("JSON: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("CSV: {e}"))
    }
}

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
