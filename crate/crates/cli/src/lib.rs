//! Command implementations behind the `lucaslab` binary.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Evaluation(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    /// 0 success, 1 check failure or evaluation error, 2 usage or config error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Evaluation(_) | CliError::CheckFailed(_) => 1,
        }
    }
}

/// Size the global rayon pool from `LUCASLAB_THREADS` (unset or 0 = auto).
pub fn configure_threads(value: Option<&str>) -> Result<(), CliError> {
    let threads = match value.map(str::trim) {
        None | Some("") => 0,
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("LUCASLAB_THREADS must be a non-negative integer, got `{v}`")))?,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}
