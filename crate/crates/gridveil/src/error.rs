use std::path::PathBuf;

use thiserror::Error;

use crate::scenario::ValidationError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("scenario is not valid JSON (line {line}, column {column}): {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("scenario failed validation:\n{}", format_validation(.0))]
    Validation(Vec<ValidationError>),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{stage}: {source}")]
    Numerical { stage: &'static str, source: gridveil_core::Error },
    #[error("{stage}: {detail}")]
    Derived { stage: &'static str, detail: String },
}

fn format_validation(errors: &[ValidationError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    /// 1 for configuration and validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) | CliError::Io { .. } => 1,
            CliError::Numerical { source, .. } if source.is_domain() => 1,
            CliError::Numerical { .. } | CliError::Derived { .. } => 2,
        }
    }

    pub(crate) fn numerical(stage: &'static str) -> impl FnOnce(gridveil_core::Error) -> CliError {
        move |source| CliError::Numerical { stage, source }
    }
}
