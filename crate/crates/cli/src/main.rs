mod args;
mod commands;
mod output;

use clap::Parser;

use crate::args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Exact(a) => commands::exact(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Sample(a) => commands::sample(a),
        Command::Enumerate(a) => commands::enumerate(a),
        Command::Markov(a) => commands::markov(a),
    };
    if let Err(e) = result {
        let hint = match &e {
            commands::CliError::Core(forest_core::Error::TooLarge { .. }) => " (try `estimate` or `--estimate N`)",
            _ => "",
        };
        eprintln!("error: {e}{hint}");
        std::process::exit(e.exit_code());
    }
}
