mod bench;
mod config;
mod grn;
mod inputs;
mod simulate;
mod train;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

const AFTER_HELP: &str = "\
Config files (--config) hold one `key = value` per line; `#` starts a comment.
Keys are the long flag names without the leading dashes, e.g. `eta = 0.05` or
`lambda-l1 = 0.01`. A flag given on the command line overrides the file,
which overrides the built-in default. Unknown keys are rejected.

PRSB_THREADS caps the number of worker threads (default: all cores).
Progress goes to stderr; results are written only to the requested files.";

/// Ensembles over learned per-feature selection probabilities.
#[derive(Debug, Parser)]
#[command(name = "prsb", version, after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write train/test tables and the relevant feature list of a simulated problem.
    Simulate(simulate::SimulateArgs),
    /// Learn selection probabilities and a final ensemble.
    Train(Box<train::TrainArgs>),
    /// Run a reference method: a single model, random subspace, or a UMDA ranking.
    Baseline(Box<train::BaselineArgs>),
    /// Rank regulatory edges from an expression matrix with a group penalty sweep.
    Grn(Box<grn::GrnArgs>),
    /// Run the simulated benchmark grid with per-seed checkpoints.
    Bench(bench::BenchArgs),
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("PRSB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("PRSB_THREADS={raw:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Train(a) => train::run_train(&a),
        Command::Baseline(a) => train::run_baseline(&a),
        Command::Grn(a) => grn::run(&a),
        Command::Bench(a) => bench::run(&a),
    }
}

/// The error chain joined with `: `, skipping causes whose text the
/// previous message already includes (library errors embed their source).
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut last = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !last.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
        last = msg;
    }
    out
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
