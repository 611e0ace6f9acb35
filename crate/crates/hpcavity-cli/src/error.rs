use std::fmt;
use std::path::PathBuf;

/// Failure of a CLI run; `Display` gives a one-line `kind: detail` message.
#[derive(Debug)]
pub enum CliError {
    Config { path: PathBuf, msg: String },
    Io { path: PathBuf, msg: String },
    Engine(hpcavity::Error),
    Unsupported(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Unsupported(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Engine(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { path, msg } => write!(f, "config error: {}: {}", path.display(), msg.trim_end()),
            CliError::Io { path, msg } => write!(f, "io error: {}: {msg}", path.display()),
            CliError::Engine(e) => write!(f, "engine error: {e}"),
            CliError::Unsupported(m) => write!(f, "unsupported: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hpcavity::Error> for CliError {
    fn from(e: hpcavity::Error) -> Self {
        CliError::Engine(e)
    }
}
