mod args;
mod common;
mod evaluate;
mod extract;
mod stats;
mod synthesize;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, EvaluateCommand};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Extract(a) => extract::run(a),
        Command::Synthesize(a) => synthesize::run(a),
        Command::Evaluate(EvaluateCommand::Sgg(a)) => evaluate::run_sgg(a),
        Command::Evaluate(EvaluateCommand::Qa(a)) => evaluate::run_qa(a),
        Command::Stats(a) => stats::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("forge: {e}");
            ExitCode::from(e.code())
        }
    }
}
