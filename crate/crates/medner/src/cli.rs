use std::ffi::OsString;

use clap::{Parser, Subcommand};

use crate::commands::{compare, eval, predict, prepare, synthetic, train};
use crate::CliError;

/// Clinical named-entity recognition with a from-scratch transformer.
#[derive(Debug, Parser)]
#[command(name = "medner", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic labeled corpus.
    GenSynthetic(synthetic::GenSyntheticArgs),
    /// De-identify, validate, split and build the vocabulary.
    Prepare(prepare::PrepareArgs),
    /// Train a model on prepared splits.
    Train(train::TrainArgs),
    /// Score a checkpoint on a labeled corpus.
    Eval(eval::EvalArgs),
    /// Tag unlabeled text.
    Predict(predict::PredictArgs),
    /// Render a model comparison table.
    Compare(compare::CompareArgs),
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::GenSynthetic(a) => synthetic::run(a),
        Command::Prepare(a) => prepare::run(a),
        Command::Train(a) => train::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Predict(a) => predict::run(a),
        Command::Compare(a) => compare::run(a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
