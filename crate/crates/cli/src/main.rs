//! `fusekit`: synthetic scenes, staged fusion runs and map metrics.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 numerical
//! failure.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            for line in f.diagnostics() {
                eprintln!("  {line}");
            }
            ExitCode::from(f.code())
        }
    }
}
