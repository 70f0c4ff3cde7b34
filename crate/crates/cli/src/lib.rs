//! Command-line driver for `fewbody-core`: JSON configuration, JSON-lines
//! traces and trajectories, CSV plot data and append-only run manifests.
//!
//! Exit codes: 0 success, 2 input error, 3 runtime or model error,
//! 4 verification failure.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

pub use cli::Cli;
pub use commands::{execute, Outcome};
pub use error::{CliError, CliResult, ExitKind};
