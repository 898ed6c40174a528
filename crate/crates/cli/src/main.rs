mod ablate;
mod config;
mod eval;
mod exit;
mod overlay;
mod synth;
mod track;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "sparsecf", version, about = "Sparse correlation filter tracker with context learning and keyfilter selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track the target of one sequence directory.
    Track(track::TrackArgs),
    /// Score predictions against ground truth, or run a whole dataset.
    Eval(eval::EvalArgs),
    /// Compare tracker variants on a dataset or a synthetic suite.
    Ablate(ablate::AblateArgs),
    /// Render a synthetic sequence directory.
    Synth(synth::SynthArgs),
    /// Print a tracker configuration as JSON.
    Config(config::ConfigArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Track(a) => track::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Ablate(a) => ablate::run(a),
        Command::Synth(a) => synth::run(a),
        Command::Config(a) => config::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
