use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Regret(a) => commands::regret(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Test(a) => commands::test(&a),
        Command::A1Walk(a) => commands::a1_walk(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
