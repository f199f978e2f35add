use std::path::PathBuf;

use lenstrans::Error as CoreError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_CONTRACT: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("numeric failure: {message} (residual {residual:.3e})")]
    Numeric { message: String, residual: f64 },
    #[error("contract violation: {0}")]
    Contract(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Read { .. } => EXIT_CONFIG,
            CliError::Numeric { .. } | CliError::Write { .. } => EXIT_NUMERIC,
            CliError::Contract(_) => EXIT_CONTRACT,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(m) | CoreError::Domain(m) => CliError::Config(m),
            CoreError::Unsupported(m) => CliError::Config(format!("unsupported: {m}")),
            CoreError::Numeric { message, residual } => CliError::Numeric { message, residual },
            CoreError::Contract(m) => CliError::Contract(m),
        }
    }
}
