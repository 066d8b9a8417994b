use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use egd_cli::args::{Cli, Command};
use egd_cli::commands::{self, Output};
use egd_cli::{CliError, CliResult};

/// Caps the worker pool at `EGD_THREADS` when set.
fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("EGD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("EGD_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot size thread pool: {e}")))
}

fn run(cli: &Cli) -> CliResult<Output> {
    configure_threads()?;
    match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Basins(a) => commands::basins(a),
        Command::Portrait(a) => commands::portrait(a),
        Command::Corpus(a) => commands::corpus(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = run(&cli);
    let failure = match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.stdout.as_bytes());
            let _ = stdout.flush();
            out.failure
        }
        Err(e) => Some(e),
    };
    match failure {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
