mod commands;
mod config;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use config::{Cli, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(rus_core::Error),
    Internal(String),
}

impl From<rus_core::Error> for CliError {
    fn from(e: rus_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "error: {e}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = RunConfig::resolve(cli.command, cli.flags)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let emission = commands::dispatch(&cfg)?;
    let bytes = output::render(&cfg, &emission)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &bytes)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Internal(e.to_string()))?,
    }
    Ok(emission.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
