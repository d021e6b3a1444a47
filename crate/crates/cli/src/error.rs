use harper_core::HarperError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A configuration key or flag is invalid. The message starts with the key.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] HarperError),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(key: &str, msg: impl std::fmt::Display) -> Self {
        Self::Config(format!("{key}: {msg}"))
    }

    pub fn io(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        Self::Io(format!("{context}: {e}"))
    }

    /// 2 for bad input, 3 for a tripped numeric guard, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(e) if e.is_numeric() => 3,
            Self::Numeric(_) => 2,
            Self::Io(_) => 1,
        }
    }
}
