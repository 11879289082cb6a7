//! `bscrls`: train, grow, evaluate and diagnose broad residual networks from
//! CSV data. Exit status is 0 on success, 1 on a runtime failure and 2 on a
//! usage error.

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

mod commands;
mod config;
mod opts;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use commands::{bench, diagnose, eval, increment, synth, train};

#[derive(Parser, Debug)]
#[command(name = "bscrls", version, about = "Broad residual learning with a supervisory gate")]
struct Cli {
    /// key=value file of flag defaults for the subcommand; flags given on the
    /// command line take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model and write its archive and per-layer trace
    Train(train::TrainArgs),
    /// Metric row for a stored model, optionally with error-vs-depth curves
    Eval(eval::EvalArgs),
    /// Extend a stored model with enhancement nodes, feature nodes or rows
    Increment(increment::IncrementArgs),
    /// Convergence report for a training trace
    Diagnose(diagnose::DiagnoseArgs),
    /// Compare gated and plain training over several seeds
    Bench(bench::BenchArgs),
    /// Write a generated data set as CSV
    Synth(synth::SynthArgs),
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect(), &Cli::command()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::Train(a) => train::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Increment(a) => increment::run(a),
        Command::Diagnose(a) => diagnose::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Synth(a) => synth::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
