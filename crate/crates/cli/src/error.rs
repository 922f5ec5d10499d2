use std::path::Path;

use iceberg_core::Error as CoreError;
use thiserror::Error;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("invalid configuration:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<String>),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) | CliError::Io { .. } => EXIT_NUMERICAL,
        }
    }

    /// Classify a core error met while building inputs.
    pub fn from_setup(field: &str, e: CoreError) -> Self {
        match e {
            CoreError::NotConverged { .. } | CoreError::ShapingNotConverged(_) => CliError::Numerical(e.to_string()),
            other => CliError::Validation(vec![format!("{field}: {other}")]),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io(source) => CliError::Io {
                path: String::from("<input>"),
                source,
            },
            CoreError::NotConverged { .. } | CoreError::ShapingNotConverged(_) | CoreError::EnumerationTooLarge(_) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Validation(vec![other.to_string()]),
        }
    }
}

/// Accumulates every violated field before failing.
#[derive(Debug, Default)]
pub struct Violations(Vec<String>);

impl Violations {
    pub fn push(&mut self, field: &str, reason: impl std::fmt::Display) {
        self.0.push(format!("{field}: {reason}"));
    }

    pub fn check(&mut self, ok: bool, field: &str, reason: impl std::fmt::Display) {
        if !ok {
            self.push(field, reason);
        }
    }

    /// Record the error of `r` under `field` and return its value.
    pub fn take<T, E: std::fmt::Display>(&mut self, field: &str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(field, e);
                None
            }
        }
    }

    pub fn finish(self) -> Result<(), CliError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(self.0))
        }
    }
}

impl Violations {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
