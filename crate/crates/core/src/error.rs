use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Geometric input that has no well-defined answer (e.g. the normal at the sphere center).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Invalid configuration, reported with the offending key path.
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// The explicit integrator produced a non-finite value.
    #[error("numerical instability at t = {t} (step {step}): {detail}")]
    Unstable { t: f64, step: usize, detail: String },

    /// The tracked interface or masked region has vanished.
    #[error("extinction: {0}")]
    Extinction(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
