//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 verification failure, 2 config error,
//! 3 data error, 4 empty result.

mod args;
mod commands;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command, GlobalArgs};

use crate::error::Error;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: String) -> Self {
        Self { code, message }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::MissingRecord(_)
        | Error::Validation(_)
        | Error::Index { .. }
        | Error::Checkpoint(_)
        | Error::Io { .. }
        | Error::Json { .. } => 3,
        Error::Diverged { .. } | Error::Numeric(_) | Error::Dimension { .. } => 1,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli.global, &cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
