use std::io;

use thiserror::Error;

/// A simulator or composition was driven outside its behavioral contract.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("step called before initialize")]
    NotInitialized,
    #[error("both sub-simulators are absorbed; the combined episode is over")]
    BothAbsorbed,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
