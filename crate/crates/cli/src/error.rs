use std::path::PathBuf;

use serde_json::json;
use swarmsir_core::Error as CoreError;

/// Process exit status of the `swarmsir` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Config = 1,
    Tolerance = 2,
    Runtime = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error("comparison outside tolerance: {0}")]
    Tolerance(String),

    #[error(transparent)]
    Runtime(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Maps a core validation error onto the scenario section it came from.
    pub fn from_core(section: &str, e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput { field, reason } => CliError::Validation {
                field: format!("{section}.{field}"),
                reason,
            },
            other => CliError::Runtime(other),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Validation { .. } => "validation",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::Tolerance(_) => "tolerance",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Usage(_) => ExitCode::Config,
            CliError::Tolerance(_) => ExitCode::Tolerance,
            CliError::Io { .. } | CliError::Runtime(_) => ExitCode::Runtime,
        }
    }

    /// One-line JSON rendering for stderr.
    pub fn to_json_line(&self) -> String {
        let mut v = json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code() as i32,
            }
        });
        match self {
            CliError::Validation { field, .. } => v["error"]["field"] = json!(field),
            CliError::Parse { line, column, .. } => {
                v["error"]["line"] = json!(line);
                v["error"]["column"] = json!(column);
            }
            _ => {}
        }
        v.to_string()
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
