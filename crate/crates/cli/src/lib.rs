//! Batch front end: ingestion, fitting, evaluation and synthesis with
//! reproducible JSON/CSV artifacts.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input, 3 validation
//! found rejected rows but valid rows remain.

pub mod args;
pub mod commands;
pub mod json;
pub mod manifest;

use thiserror::Error;

pub use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Internal(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

/// Successful outcomes that still carry a distinct exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    PartiallyValid,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::PartiallyValid => 3,
        }
    }
}

pub type CliResult<T = Status> = Result<T, CliError>;

pub fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::FitPathloss(a) => commands::fit_pathloss(a),
        Command::FitLosprob(a) => commands::fit_losprob(a),
        Command::Shadow(a) => commands::shadow(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synth(a) => commands::synth(a),
    }
}
