//! Command-line front end: argument parsing, configuration and the
//! orchestration behind each subcommand.

pub mod commands;
pub mod config;

use std::ffi::OsString;

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::commands::{Outcome, EXIT_CONFIG, EXIT_FAILURE};
use crate::config::{CommandKind, Flags, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) | CliError::Runtime(_) => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "benney",
    version,
    about = "Numerical laboratory for the dispersionless Benney hierarchy on the circle"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the eigenvalue identities on random strictly hyperbolic samples.
    Verify(Flags),
    /// Evolve initial data and classify the result.
    Simulate(Flags),
    /// Predict gradient blow-up, optionally confirming it by simulation.
    Blowup(Flags),
    /// Invert critical values to coefficients, or run the round-trip check.
    Maclane(Flags),
    /// Classify a simulated solution: traveling wave, constant or neither.
    Classify(Flags),
}

impl Command {
    fn parts(&self) -> (CommandKind, &Flags) {
        match self {
            Command::Verify(f) => (CommandKind::Verify, f),
            Command::Simulate(f) => (CommandKind::Simulate, f),
            Command::Blowup(f) => (CommandKind::Blowup, f),
            Command::Maclane(f) => (CommandKind::Maclane, f),
            Command::Classify(f) => (CommandKind::Classify, f),
        }
    }
}

fn finish<R: Serialize>(outcome: Result<Outcome<R>, CliError>) -> Result<i32, CliError> {
    let o = outcome?;
    for line in &o.summary {
        println!("{line}");
    }
    Ok(o.code)
}

/// Runs a parsed command and returns its exit code.
pub fn execute(cmd: &Command) -> Result<i32, CliError> {
    let (kind, flags) = cmd.parts();
    let cfg = RunConfig::resolve(kind, flags)?;
    match kind {
        CommandKind::Verify => finish(commands::cmd_verify(&cfg)),
        CommandKind::Simulate => finish(commands::cmd_simulate(&cfg)),
        CommandKind::Blowup => finish(commands::cmd_blowup(&cfg)),
        CommandKind::Maclane => finish(commands::cmd_maclane(&cfg)),
        CommandKind::Classify => finish(commands::cmd_classify(&cfg)),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
