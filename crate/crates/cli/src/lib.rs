//! Command-line front end: configuration files, presets and the
//! `construct`, `verify`, `export` and `preset` commands.

pub mod commands;
pub mod config;
pub mod presets;

use thiserror::Error;

/// Process exit status for a run that verified.
pub const EXIT_OK: i32 = 0;
/// A check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Configuration, validation or I/O error.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Core(#[from] qes_core::Error),
    #[error(transparent)]
    Verify(#[from] qes_core::verify::VerifyError),
    #[error("unknown preset {name:?}; known presets: {}", known.join(", "))]
    UnknownPreset { name: String, known: Vec<&'static str> },
    #[error("no configuration given; pass --config PATH")]
    NoConfig,
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}
