//! Command implementations and the benchmark sweep behind the
//! `sparseprint` binary.

pub mod args;
pub mod commands;
pub mod sweep;

pub use commands::{run, CliError, EXIT_ERROR, EXIT_OK, EXIT_UNKNOWN};
