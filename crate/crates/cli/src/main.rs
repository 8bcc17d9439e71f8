mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::config::one_line;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                let _ = e.print();
                return ExitCode::from(1);
            }
            _ => {
                let msg = e.to_string();
                let first = msg.lines().next().unwrap_or_default();
                eprintln!("error[usage]: {}", one_line(first.trim_start_matches("error: ")));
                return ExitCode::from(1);
            }
        },
    };
    let started = Instant::now();
    match commands::run(cli.command) {
        Ok(outcome) => {
            eprintln!("wrote {} in {:.2?}", outcome.out.display(), started.elapsed());
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::from(1)
        }
    }
}
