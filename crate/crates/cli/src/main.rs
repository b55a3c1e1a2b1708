// SPDX-License-Identifier: Apache-2.0

//! `ratchet`: exact analytics, simulation and verification suites for the
//! tournament ratchet.
//!
//! Exit codes: 0 success, 1 a gated check failed, 2 usage or config error.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigArgs;

/// Error caused by the invocation rather than the computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "ratchet", version, about = "Muller's ratchet with tournament selection")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print derived scales and regime warnings.
    Derive,
    /// Potential, hitting times and equilibrium summaries.
    Analytics {
        /// Also write the potential table `n,U,logR`.
        #[arg(long)]
        dump_potential: bool,
    },
    /// Exact mean extinction times and the quasi-stationary law.
    Oracle,
    /// Run replicates of a named simulator (y0, ystar, pair, ratchet).
    Sim { name: String },
    /// Run a verification suite, or `all`.
    Verify { suite: String },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<ratchet_core::Error>() {
        Some(ratchet_core::Error::InvalidParams(_) | ratchet_core::Error::UnknownName { .. }) => 2,
        _ => 1,
    }
}

fn run(cli: &Cli, argv: &[String]) -> anyhow::Result<commands::Outcome> {
    let cfg = cli.config.resolve()?;
    match &cli.command {
        Command::Derive => commands::derive(&cfg),
        Command::Analytics { dump_potential } => commands::analytics(argv, &cfg, *dump_potential),
        Command::Oracle => commands::oracle(argv, &cfg),
        Command::Sim { name } => commands::sim(argv, &cfg, name).map_err(|e| {
            if matches!(e.downcast_ref::<ratchet_core::Error>(), Some(ratchet_core::Error::UnknownName { .. })) {
                UsageError(format!("unknown simulator `{name}`; valid: {}", commands::sim_names())).into()
            } else {
                e
            }
        }),
        Command::Verify { suite } => commands::verify(argv, &cfg, suite),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(&cli, &argv) {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
