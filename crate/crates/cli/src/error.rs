use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const DATA: i32 = 3;
    pub const ESTIMATION: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{origin}: {message}")]
    Data { origin: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write output: {0}")]
    Output(std::io::Error),
    #[error("estimation failed: {0}")]
    Estimation(robscatter::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Output(_) => exit::USAGE,
            CliError::Data { .. } | CliError::Io { .. } => exit::DATA,
            CliError::Estimation(_) => exit::ESTIMATION,
        }
    }

    pub fn data(origin: impl std::fmt::Display, message: impl Into<String>) -> Self {
        CliError::Data { origin: origin.to_string(), message: message.into() }
    }
}

impl From<robscatter::Error> for CliError {
    fn from(e: robscatter::Error) -> Self {
        use robscatter::Error as E;
        match e {
            E::Domain(m) | E::Tunability(m) => CliError::Usage(m),
            E::InvalidData(m) => CliError::data("input", m),
            other => CliError::Estimation(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
