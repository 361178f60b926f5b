use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the domain of an operation (label out of range,
    /// misaligned prediction shapes, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    #[error("optimization error: {0}")]
    Optimization(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("selection error: {0}")]
    Selection(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format_at(file: impl AsRef<std::path::Path>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            location: format!("{}:{}", file.as_ref().display(), line),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// The message without the class prefix.
    pub fn detail(&self) -> String {
        match self {
            Error::Domain(m)
            | Error::Config(m)
            | Error::Optimization(m)
            | Error::Training(m)
            | Error::Selection(m) => m.clone(),
            Error::Format { location, message } => format!("{location}: {message}"),
            Error::Io { path, source } => format!("{}: {source}", path.display()),
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Format { .. } => "format",
            Error::Optimization(_) => "optimization",
            Error::Training(_) => "training",
            Error::Selection(_) => "selection",
            Error::Io { .. } => "io",
        }
    }
}
