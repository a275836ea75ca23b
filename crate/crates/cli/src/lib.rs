//! The `cogs` command line: dataset generation, VAE and solver training,
//! evaluation, and figure/table emission from run logs.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime or numerical failure.

pub mod args;
pub mod commands;
pub mod error;
pub mod formats;
pub mod plot;
pub mod table;

use std::ffi::OsString;

use clap::Parser;

pub use error::{CliError, Result};

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cogs: {e}");
            e.exit_code()
        }
    }
}
