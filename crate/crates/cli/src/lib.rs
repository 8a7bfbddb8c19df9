//! Command-line front end for the `metaemb` library.

pub mod args;
pub mod commands;
pub mod config;
pub mod pipeline;

use anyhow::Result;

pub use args::{Cli, Command};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Info(a) => commands::info(a),
        Command::Build(a) => commands::build(a),
        Command::Extend(a) => commands::extend(a),
        Command::EvalSim(a) => commands::eval_sim(a),
        Command::EvalAnalogy(a) => commands::eval_analogy_cmd(a),
        Command::Sweep(a) => commands::sweep(a),
    }
}
