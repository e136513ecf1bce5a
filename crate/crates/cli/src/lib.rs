//! Batch front end for `ottokz-core`: config parsing, cycle runs, parameter
//! sweeps, scaling fits and bound evaluation, with deterministic JSON and CSV
//! output.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use app::{execute, Cli};
pub use error::CliError;
