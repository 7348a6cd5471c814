//! Command-line layer over `henon-core`: configuration, output files, the
//! profile cache and the acceptance suite.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numeric(#[from] henon_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0} acceptance criteria failed")]
    VerifyFailed(usize),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Self::Invalid(msg.into())
    }

    /// 1 for failed criteria, 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::VerifyFailed(_) => 1,
            Self::Invalid(_) | Self::Numeric(henon_core::Error::Domain(_)) => 2,
            Self::Numeric(_) | Self::Io(_) | Self::Json(_) => 3,
        }
    }
}
