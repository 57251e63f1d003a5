//! Experiment front-end over the `codegrain` library. Every subcommand
//! writes CSV/JSON/SVG files plus a `manifest.json` into an output
//! directory and reports whether its internal verifications passed.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod svg;

use thiserror::Error;

pub use commands::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("invalid arguments: {0}")]
    Arguments(String),
    #[error(transparent)]
    Stay(#[from] codegrain::stays::StayError),
    #[error(transparent)]
    Code(#[from] codegrain::codes::CodeError),
    #[error(transparent)]
    Design(#[from] codegrain::design::DesignError),
    #[error(transparent)]
    Fit(#[from] codegrain::regression::FitError),
    #[error(transparent)]
    Spectra(#[from] codegrain::spectra::SpectraError),
    #[error(transparent)]
    Consistency(#[from] codegrain::consistency::ConsistencyError),
    #[error(transparent)]
    Synthetic(#[from] codegrain::synthetic::SyntheticError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Process exit code when a run completes but a verification fails.
pub const EXIT_VERIFICATION_FAILED: i32 = 2;
/// Process exit code for errors.
pub const EXIT_ERROR: i32 = 1;
