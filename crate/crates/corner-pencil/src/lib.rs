//! File formats and the command-line front end for `corner-pencil-core`.
//!
//! * [`config`]: the JSON configuration file.
//! * [`traces`]: trace-set files (`poly:` and `csv:` traces).
//! * [`report`]: JSON output documents.
//! * [`cli`]: argument parsing and the subcommands.

pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod traces;

pub use error::CliError;
