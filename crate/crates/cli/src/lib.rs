//! Library half of the `bvlab` command-line tool: configuration, output,
//! the subcommands, and the comparison checks behind `selfcheck`.

pub mod checks;
pub mod commands;
pub mod config;
pub mod output;
pub mod selfcheck;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bvlab_core::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0} self-check(s) failed")]
    SelfcheckFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_capacity() => 3,
            CliError::Core(_) | CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::SelfcheckFailed(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::SelfcheckFailed(_) => "selfcheck_failed",
        }
    }
}

