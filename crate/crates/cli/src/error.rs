use serde::Serialize;
use thiserror::Error;

use lecam_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration for '{key}': {message}")]
    Config { key: String, message: String },
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o failure on '{path}': {message}")]
    Io { path: String, message: String },
}

/// Machine-readable error record written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: i32,
    pub kind: &'static str,
    /// Name of the offending parameter or constraint, when there is one.
    pub constraint: Option<String>,
    pub message: String,
}

impl CliError {
    /// 2 invalid configuration, 3 numerical failure, 4 i/o failure.
    pub fn status(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Core(e) if is_validation(e) => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let kind = match self.status() {
            2 => "invalid_config",
            3 => "numerical_failure",
            _ => "io_failure",
        };
        let constraint = match self {
            CliError::Config { key, .. } => Some(key.clone()),
            CliError::Core(CoreError::InvalidParameter { name, .. }) => Some(name.to_string()),
            CliError::Core(CoreError::InvalidTangent { constraint, .. }) => {
                Some(constraint.to_string())
            }
            CliError::Core(CoreError::SampleTooSmall { .. }) => Some("n".into()),
            CliError::Core(CoreError::Arbitrage { .. }) => Some("down < growth < up".into()),
            _ => None,
        };
        ErrorRecord {
            status: self.status(),
            kind,
            constraint,
            message: self.to_string(),
        }
    }
}

fn is_validation(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::InvalidParameter { .. }
            | CoreError::InvalidTangent { .. }
            | CoreError::SampleTooSmall { .. }
            | CoreError::Arbitrage { .. }
    )
}
