use thiserror::Error;

/// CLI-level failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad command line or configuration (exit 2). `line` points at the
    /// offending config line when one exists.
    #[error("{}{message}", match line { Some(l) => format!("config line {l}: "), None => String::new() })]
    Config { line: Option<usize>, message: String },

    /// A computation failed (exit 3).
    #[error("{0}")]
    Numerical(String),

    /// A pass/fail check did not pass (exit 4).
    #[error("{0}")]
    CheckFailed(String),

    /// Filesystem trouble (exit 1).
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config { line: None, message: message.into() }
    }

    pub fn config_at(line: usize, message: impl Into<String>) -> Self {
        CliError::Config { line: Some(line), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::CheckFailed(_) => 4,
        }
    }
}

impl From<sampden::Error> for CliError {
    fn from(e: sampden::Error) -> Self {
        match e {
            sampden::Error::Numerical(m) => CliError::Numerical(m),
            other => CliError::config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
