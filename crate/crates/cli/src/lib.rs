//! Ingestion, configuration, and output formats behind the `lgdid` binary.

pub mod config;
pub mod error;
pub mod io;
pub mod output;

pub use error::CliError;
