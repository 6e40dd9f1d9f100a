mod args;
mod backend;
mod commands;
mod diff;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use backend::{BackendChoice, MODEL_ENV};
use error::{CliError, CliResult};

fn validate(command: &Command) -> CliResult<()> {
    match command {
        Command::Score(a) => commands::validate_score(a),
        Command::Compress(a) => commands::validate_compress(a),
        Command::EvalCompression(a) => commands::validate_eval_compression(a),
        Command::EvalPruning(a) => commands::validate_eval_pruning(a),
        Command::EvalPredicates(a) => commands::validate_eval_predicates(a),
    }
}

fn run(cli: &Cli) -> CliResult<String> {
    let env_model = std::env::var_os(MODEL_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    let choice = BackendChoice::resolve(&cli.global, env_model)?;
    validate(&cli.command)?;
    let jobs = match cli.global.jobs {
        Some(0) => return Err(CliError::config("--jobs must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    let backend = choice.load()?;
    let desc = choice.describe();
    if cli.global.verbose > 0 {
        eprintln!("backend {desc}, {jobs} worker(s)");
    }
    let backend = backend.as_ref();
    pool.install(|| match &cli.command {
        Command::Score(a) => commands::score(a, backend, cli.global.verbose),
        Command::Compress(a) => commands::compress_cmd(a, backend),
        Command::EvalCompression(a) => commands::eval_compression(a, backend, &desc),
        Command::EvalPruning(a) => commands::eval_pruning(a, backend, &desc),
        Command::EvalPredicates(a) => commands::eval_predicates(a, backend, &desc),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(error::EXIT_CONFIG as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
