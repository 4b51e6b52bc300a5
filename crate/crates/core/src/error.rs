use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration field failed validation. `field` is the dotted path
    /// of the offending key as it appears in the TOML file.
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no initial spreaders: mean spread rate at t=0 rounds to zero nodes")]
    NoInitialSpreaders,

    #[error("generated graph is not connected")]
    Disconnected,

    #[error("integration left the unit interval at t={t}: s={s}, i={i} (step too large?)")]
    Integration { t: f64, s: f64, i: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
