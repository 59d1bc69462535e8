//! Error categories mapped to process exit codes.

use std::fmt;

/// Failure category; decides the exit code and the machine-readable error
/// document printed to stderr.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed/invalid input files or configs (exit 2).
    Schema,
    /// Numeric or algorithmic failure (exit 3).
    Numeric,
    /// Filesystem trouble (exit 4).
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Schema => 2,
            ErrorKind::Numeric => 3,
            ErrorKind::Io => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Schema => "schema",
            ErrorKind::Numeric => "numeric",
            ErrorKind::Io => "io",
        }
    }
}

/// A categorized CLI failure.
#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn schema(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Schema,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Numeric,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.as_str(), self.message)
    }
}

impl std::error::Error for CliError {}

/// Maps a core error to its CLI category: configuration and vocabulary
/// problems are schema errors, everything else is numeric.
pub fn categorize_core(err: &bevprompt_core::Error) -> ErrorKind {
    use bevprompt_core::Error as E;
    match err {
        E::Config { .. } | E::UnknownName { .. } | E::UnknownLabel { .. } | E::MissingField { .. } => {
            ErrorKind::Schema
        }
        _ => ErrorKind::Numeric,
    }
}

/// Converts a core error into a categorized CLI failure.
pub fn from_core(err: bevprompt_core::Error) -> CliError {
    CliError {
        kind: categorize_core(&err),
        message: err.to_string(),
    }
}

/// Extracts the exit category from an `anyhow` chain: an explicit
/// [`CliError`] wins, then IO errors, then JSON errors (schema); anything
/// else counts as numeric.
pub fn classify(err: &anyhow::Error) -> ErrorKind {
    for cause in err.chain() {
        if let Some(cli) = cause.downcast_ref::<CliError>() {
            return cli.kind;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ErrorKind::Io;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return ErrorKind::Schema;
        }
        if let Some(core) = cause.downcast_ref::<bevprompt_core::Error>() {
            return categorize_core(core);
        }
    }
    ErrorKind::Numeric
}
