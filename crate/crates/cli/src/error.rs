use ccd_core::CcdError;
use serde_json::json;

use crate::config::ConfigError;
use crate::dataset::DatasetError;

/// Exit status for configuration and usage errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit status for I/O failures.
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(CcdError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Dataset(#[from] DatasetError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) => match e {
                CcdError::Validation(_) | CcdError::InvalidDrive(_) | CcdError::Compile { .. } => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            },
            CliError::Io(_) => EXIT_IO,
            CliError::Dataset(DatasetError::Io { .. }) => EXIT_IO,
            CliError::Dataset(DatasetError::Malformed(_)) => EXIT_NUMERICAL,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Core(CcdError::Validation(_)) => "validation",
            CliError::Core(CcdError::InvalidDrive(_)) => "invalid_drive",
            CliError::Core(CcdError::Compile { .. }) => "compile",
            CliError::Core(CcdError::IntegratorFailure { .. }) => "integrator_failure",
            CliError::Core(_) => "numerical",
            CliError::Io(_) | CliError::Dataset(DatasetError::Io { .. }) => "io",
            CliError::Dataset(_) => "dataset",
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Config(ConfigError::Parse { line, column, .. }) = self {
            v["line"] = json!(line);
            v["column"] = json!(column);
        }
        v.to_string()
    }
}
