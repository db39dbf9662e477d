//! `pasta`: dataset checks, embedding, scorer training and evaluation, and
//! explanation metrics, selection and steering.

mod args;
mod commands;
mod embeddings;
mod exit;
mod run;
mod scoring;

use std::process::ExitCode;

use clap::Parser;

#[derive(Parser, Debug)]
#[command(
    name = "pasta",
    version,
    about = "Score explanations the way people rate them",
    long_about = "Score explanations the way people rate them.\n\n\
        Defaults are the standard training and evaluation settings. \
        Each command writes its artifacts and a run_manifest.json (configuration, seed, \
        SHA-256 of inputs and outputs) into --out.\n\n\
        Exit codes: 0 ok, 1 other runtime error, 2 invalid input, 3 bridge failure, 4 numeric failure."
)]
struct Cli {
    #[command(flatten)]
    global: args::Global,
    #[command(subcommand)]
    command: commands::Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("PASTA_LOG").init();
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(exit::VALIDATION);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::RUNTIME);
        }
    }
    match commands::run(&cli.command, &cli.global) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e))
        }
    }
}
