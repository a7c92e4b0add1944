//! `mionet`: generate operator datasets, train and evaluate models, and
//! run the benchmark tables and self-diagnostics.

mod bench;
mod diag;
mod eval;
mod gen;
mod manifest;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mionet::data::Layout;
use mionet::Error;

#[derive(Parser)]
#[command(name = "mionet", version, about = "Multiple-input neural operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample inputs, run the reference solver, and write train/test datasets.
    GenData(gen::Args),
    /// Train a model configuration for several trials.
    Train(train::Args),
    /// Evaluate a checkpoint on a dataset.
    Eval(eval::Args),
    /// Reproduce one benchmark table.
    Bench(bench::Args),
    /// Projection decay, GRF moments, or gradient checks.
    Diagnostics(diag::Args),
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum LayoutArg {
    /// `records` for the ODE and AD systems, `factored` for DR.
    Auto,
    Records,
    Factored,
}

impl LayoutArg {
    fn resolve(self, system: mionet::systems::System) -> Layout {
        match self {
            LayoutArg::Records => Layout::Records,
            LayoutArg::Factored => Layout::Factored,
            LayoutArg::Auto if system == mionet::systems::System::Dr => Layout::Factored,
            LayoutArg::Auto => Layout::Records,
        }
    }
}

/// Output directory flag shared by every verb.
#[derive(clap::Args, Clone, Debug)]
pub struct OutArg {
    #[arg(long)]
    pub out: PathBuf,
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.render().to_string().trim()));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::GenData(a) => gen::run(a),
        Command::Train(a) => train::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Diagnostics(a) => diag::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::from(if matches!(e, Error::Usage(_)) { 2 } else { 1 })
        }
    }
}
