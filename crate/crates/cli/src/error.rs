use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

/// Failures of a command. Each variant maps to its own process exit code
/// and a stable machine-readable code string.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("cannot write {}: {message}", path.display())]
    Output { path: PathBuf, message: String },

    #[error("dataset row {row}: {message}")]
    DatasetRow { row: usize, message: String },

    #[error("dataset schema: {0}")]
    DatasetSchema(String),

    #[error("cannot read {}: {message}", path.display())]
    InvalidInput { path: PathBuf, message: String },

    #[error(transparent)]
    Model(#[from] rbfihmm::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_schema",
            CliError::MissingInput(_) => "missing_input",
            CliError::Output { .. } => "unwritable_output",
            CliError::DatasetRow { .. } | CliError::DatasetSchema(_) => "dataset_schema",
            CliError::InvalidInput { .. } => "invalid_input",
            CliError::Model(_) => "model_failure",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingInput(_) => 3,
            CliError::Output { .. } => 4,
            CliError::DatasetRow { .. } | CliError::DatasetSchema(_) => 5,
            CliError::InvalidInput { .. } => 6,
            CliError::Model(_) => 7,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "code": self.code(),
            "exitCode": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            CliError::DatasetRow { row, .. } => body["row"] = json!(row),
            CliError::MissingInput(p) | CliError::Output { path: p, .. } | CliError::InvalidInput { path: p, .. } => {
                body["path"] = json!(p.display().to_string())
            }
            _ => {}
        }
        json!({ "error": body })
    }
}
