//! Batch driver: parses a run configuration, runs one pipeline and writes
//! CSV/JSON artifacts plus a manifest of content hashes.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CommonArgs, RunConfig};

#[derive(Parser)]
#[command(name = "borel-unfold", version, about = "Borel summation and unfolded Borel–Laplace solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Borel sum of a raw series (Padé-continued) or of a system at √ε = 0.
    BorelSum(CommonArgs),
    /// Solve the convolution equation on Ω(√ε) and sample the center manifold.
    UnfoldSolve(CommonArgs),
    /// Table of |y(x, ν√ε) − y(x, 0)| over ν and x.
    Confluence(CommonArgs),
    /// Normalizing transformation of a linear system and its residual report.
    Normalize(CommonArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct SelftestArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fail on every failed criterion, including known unattainable ones.
    #[arg(long)]
    strict: bool,
    /// Comma-separated criterion ids to run instead of all.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
}

fn run(cli: Cli) -> Result<(), error::CliError> {
    match cli.command {
        Command::BorelSum(a) => commands::borel_sum(&RunConfig::resolve(&a)?),
        Command::UnfoldSolve(a) => commands::unfold_solve(&RunConfig::resolve(&a)?),
        Command::Confluence(a) => commands::confluence(&RunConfig::resolve(&a)?),
        Command::Normalize(a) => commands::normalize(&RunConfig::resolve(&a)?),
        Command::Selftest(a) => commands::selftest(&RunConfig::resolve(&a.common)?, &a.only, a.strict),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
