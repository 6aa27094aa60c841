//! `smcf` command-line tool.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 I/O error, 4 numeric failure.

mod commands;
mod options;

use std::process::ExitCode;

use clap::Parser;

use crate::options::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
