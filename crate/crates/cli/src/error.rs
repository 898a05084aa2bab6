use thiserror::Error;

/// Failures surfaced by the command-line harness, each mapped to an exit
/// code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Scenario(String),
    #[error("planning failed: {0}")]
    Planning(String),
    #[error(transparent)]
    Core(#[from] mcgpmp::Error),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for planning failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Planning(_) | CliError::Core(mcgpmp::Error::PlanningFailed(_)) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
