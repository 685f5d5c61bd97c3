//! `spamlens`: ingest image corpora, train the spam classifier, evaluate it,
//! and explain its decisions.

mod args;
mod commands;
mod config;
mod error;
mod output;

use args::{Cli, Command};
use clap::Parser;
use config::ConfigFile;
use error::{CliError, Result};

pub struct Context {
    pub json: bool,
    pub seed: u64,
    pub config: ConfigFile,
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.global.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let threads = config.pick(cli.global.threads, "threads")?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let ctx = Context {
        json: cli.global.json,
        seed: config.pick_or(cli.global.seed, "seed", 0)?,
        config,
    };
    match cli.command {
        Command::Ingest(a) => commands::ingest::run(&ctx, a),
        Command::Train(a) => commands::train::run(&ctx, a),
        Command::Eval(a) => commands::eval::run(&ctx, a),
        Command::Explain(a) => commands::explain::run(&ctx, a),
        Command::GenSynthetic(a) => commands::gen_synthetic::run(&ctx, a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits with 2 for usage errors and 0 for --help/--version
        Err(e) => e.exit(),
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
