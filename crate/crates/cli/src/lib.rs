//! Batch front end: reads samples or panels from CSV, runs the interval,
//! estimation, testing and simulation procedures and writes JSON or CSV reports.
//!
//! Exit codes: 0 success, 1 invalid input or arguments, 2 the procedure is
//! infeasible for the data, 3 I/O failure.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod sweep;

use std::ffi::OsString;

use clap::Parser;

use crate::args::{Cli, Command, CommonArgs};
pub use crate::error::CliError;

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Ci(a) => &a.common,
        Command::Gamma(a) => &a.common,
        Command::TestSupport(a) => &a.common,
        Command::Estimate(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::Diagnose(a) => &a.common,
    }
}

fn dispatch(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Ci(a) => commands::ci(a),
        Command::Gamma(a) => commands::gamma(a),
        Command::TestSupport(a) => commands::test_support(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Diagnose(a) => commands::diagnose(a),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn try_run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = config::expand(args.into_iter().map(Into::into).collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Validation(e.render().to_string()));
        }
    };
    match common(&cli.command).threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Validation(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| dispatch(&cli.command))
        }
        None => dispatch(&cli.command),
    }
}

/// Runs and returns the process exit code, printing any error to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    match try_run(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().trim_end());
            e.exit_code()
        }
    }
}
