use std::path::PathBuf;

use thiserror::Error;

/// Command-level failures; anything here exits nonzero with the message on
/// the error stream.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] dainr::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("output directory {0} is not empty (pass --force to overwrite)")]
    OutputNotEmpty(PathBuf),
    #[error("training diverged at iteration {0}; artifacts hold the last stable snapshot")]
    Diverged(usize),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
