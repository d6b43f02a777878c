//! Command-line driver over `releq-core`: argument parsing, run
//! configuration files, canonical JSON/CSV output and exit codes.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use crate::cli::Cli;
use crate::error::CliError;

/// Parses `args`, runs the command and returns the process exit code.
/// Errors go to stderr as usage text (if any) and a one-line JSON record.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            let rendered = e.render().to_string();
            let msg = rendered.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            let err = CliError::Usage(msg);
            eprintln!("{}", err.record());
            return err.exit_code();
        }
    };
    let outcome = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start {} threads: {e}", cli.threads)))
        .and_then(|pool| pool.install(|| commands::run(&cli)));
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", err.record());
            err.exit_code()
        }
    }
}
