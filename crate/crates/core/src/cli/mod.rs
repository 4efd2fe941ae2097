//! The `bioopt` command line.
//!
//! ```text
//! bioopt <dejong|bump|vessel|fem-inverse|ivbv|pa-demo> [--config FILE] [--KEY VALUE]...
//! ```
//!
//! Every `--KEY VALUE` flag can also be given as a `KEY=VALUE` line in the
//! config file; flags win. Exit status is 0 on success, 1 for usage errors
//! and 2 for runtime failures.

mod config;
mod run;

use std::ffi::OsString;

use thiserror::Error;

pub use config::{command, parse_config, parse_config_text, EngineConfig, EngineKind, RunConfig, Subcommand, Task};
pub use run::{run, write_atomic};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_config(args).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            CliError::Clap(e).exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
