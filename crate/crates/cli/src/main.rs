//! `skj`: soft Jaccard distances and relationship analysis for keypoint cohorts.
//!
//! Exit status is 0 on success, 2 on a usage error and 1 on a runtime error.

mod commands;
mod run_manifest;

use std::process::ExitCode;

use clap::Parser;

use commands::Command;

#[derive(Debug, Parser)]
#[command(name = "skj", version, about = "Soft Jaccard distances between 3D keypoint sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match commands::run(cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
