mod artifacts;
mod compare;
mod config;
mod generate;
mod oracle;
mod solve;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smp_core::Error;

use crate::config::{ExperimentConfig, Flags};

#[derive(Parser)]
#[command(name = "smp", version, about = "Cutting-plane solvers with learned master-problem surrogates")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Write seeded instance or data files.
    Generate(Flags),
    /// Train a policy on an instance family.
    Train(Flags),
    /// Solve instances with or without a surrogate.
    Solve(Flags),
    /// Certified optimum by extensive form or enumeration.
    Oracle(Flags),
    /// Aggregate traces or regression metrics.
    Compare(Flags),
}

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_LIMIT: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Input(_) | Error::Io { .. } | Error::Format(_) => EXIT_INPUT,
                Error::Numerical(_) | Error::Internal(_) => EXIT_NUMERICAL,
                Error::Limit(_) => EXIT_LIMIT,
            };
        }
    }
    EXIT_INPUT
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (flags, run): (&Flags, fn(&ExperimentConfig) -> anyhow::Result<()>) = match &cli.verb {
        Verb::Generate(f) => (f, generate::run),
        Verb::Train(f) => (f, train::run),
        Verb::Solve(f) => (f, solve::run),
        Verb::Oracle(f) => (f, oracle::run),
        Verb::Compare(f) => (f, compare::run),
    };
    match ExperimentConfig::resolve(flags).and_then(|cfg| run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
