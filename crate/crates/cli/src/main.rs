//! `captrust` command-line front end.
//!
//! Failures print a single line `error[<kind>]: <message>` on stderr, where
//! kind is one of `usage`, `data`, `model`, `io` or `internal`. Usage errors
//! exit with status 2, everything else with 1.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use captrust_core::data::DatasetError;
use captrust_core::TrustError;
use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::{Globals, UsageError};

fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return "usage";
        }
        if let Some(e) = cause.downcast_ref::<DatasetError>() {
            return match e {
                DatasetError::Io { .. } => "io",
                _ => "data",
            };
        }
        if cause.is::<TrustError>() {
            return "model";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "internal"
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let line = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error[{kind}]: {line}");
    ExitCode::from(if kind == "usage" { 2 } else { 1 })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let globals = Globals {
        seed: cli.seed,
        bins: cli.bins.map(|b| b as usize),
        output: cli.output,
    };
    match &cli.command {
        Command::Simulate(a) => commands::simulate(&globals, a),
        Command::Fit(a) => commands::fit(&globals, a),
        Command::Trust(a) => commands::trust(&globals, a),
        Command::ValidateData(a) => commands::validate_data(&globals, a),
        Command::GenerateData(a) => commands::generate_data(&globals, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let message: Vec<&str> = rendered.lines().take_while(|l| !l.trim().is_empty()).collect();
            return fail("usage", message.join(" ").trim_start_matches("error: "));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(error_kind(&e), &format!("{e:#}")),
    }
}
