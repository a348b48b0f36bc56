//! Command-line front end, file formats and parallel sweeps for `freerecall-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;

pub use error::{CliError, Result};
