//! `rhcontract` command line: solve the free-boundary problems, simulate
//! and audit contracts, and solve the first-best problem.

mod artifacts;
mod commands;
mod config;
mod error;

#[cfg(test)]
mod cli_tests;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rhcontract::report::format_float;

use crate::artifacts::Artifacts;
use crate::config::{FormatChoice, RunConfig};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "rhcontract", version, about = "Random-horizon principal-agent contracts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Solve,
    Simulate,
    Firstbest,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the output formats.
    #[arg(long, value_enum)]
    format: Option<FormatChoice>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the configured model's value function.
    Solve(Common),
    /// Simulate the configured contract and audit it.
    Simulate(Common),
    /// Solve the first-best problem and check the second-best equality.
    Firstbest(Common),
}

impl Command {
    fn split(&self) -> (Kind, &Common) {
        match self {
            Command::Solve(c) => (Kind::Solve, c),
            Command::Simulate(c) => (Kind::Simulate, c),
            Command::Firstbest(c) => (Kind::Firstbest, c),
        }
    }
}

fn load(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(dir) = &common.out {
        cfg.output.directory = dir.clone();
    }
    if let Some(f) = common.format {
        cfg.output.formats = f.formats();
    }
    Ok(cfg)
}

fn run(kind: Kind, common: &Common) -> CliResult<String> {
    let cfg = load(common)?;
    let mut out = Artifacts::create(&cfg.output)?;
    let result = match kind {
        Kind::Solve => commands::solve(&cfg, &mut out),
        Kind::Simulate => commands::simulate(&cfg, &mut out).map(|r| {
            format!(
                "agent {} principal {} all audits passed",
                format_float(r.agent.estimate),
                format_float(r.principal.estimate)
            )
        }),
        Kind::Firstbest => commands::firstbest(&cfg, &mut out).map(|r| {
            format!(
                "lambda_hat {} v_fb {} equality holds",
                format_float(r.solution.lambda_hat),
                format_float(r.solution.v_fb)
            )
        }),
    };
    for path in out.written() {
        println!("wrote {}", path.display());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = cli.command.split();
    match run(kind, common) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
