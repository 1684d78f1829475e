use std::fmt;
use std::path::Path;

/// A failure reported as `error[<category>]: <message>` with a nonzero exit.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub category: String,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn new(category: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            category: category.into(),
            message: message.into(),
        }
    }

    pub fn parse(path: &Path, at: impl fmt::Display, what: impl fmt::Display) -> Self {
        Self::new("parse-error", format!("{}: {at}: {what}", path.display()))
    }

    pub fn invariant(path: &Path, what: impl fmt::Display) -> Self {
        Self::new("invariant-violation", format!("{}: {what}", path.display()))
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new("io-error", format!("{}: {err}", path.display()))
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    pub fn exit_code(&self) -> i32 {
        match self.category.as_str() {
            "usage" => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // one line, whatever the message contains
        let msg = self.message.replace('\n', " ");
        write!(f, "error[{}]: {msg}", self.category)
    }
}

impl std::error::Error for CliError {}

impl From<keyshot_core::Error> for CliError {
    fn from(e: keyshot_core::Error) -> Self {
        Self::new(e.category(), e.to_string())
    }
}
