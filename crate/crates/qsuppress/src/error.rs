use std::path::Path;

/// Failure of a command, mapped to the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A verification or Monte-Carlo check did not hold.
    #[error("check failed: {0}")]
    Check(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<qsuppress_core::Error> for CliError {
    fn from(e: qsuppress_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<crate::format::FormatError> for CliError {
    fn from(e: crate::format::FormatError) -> Self {
        match e {
            crate::format::FormatError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Usage(format!("protocol file: {other}")),
        }
    }
}
