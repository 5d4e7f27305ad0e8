mod args;
mod bench;
mod commands;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

/// `GK_THREADS` wins over `--threads`; 0 or absent means all cores.
fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let requested = match std::env::var("GK_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("GK_THREADS must be a non-negative integer, got {v:?}")))?,
        ),
        Err(_) => flag,
    };
    if let Some(n) = requested {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Kernel(cmd) => commands::kernel(cmd),
        Command::Classify(cmd) => commands::classify(cmd),
        Command::SweepK(cmd) => commands::sweep_k(cmd),
        Command::DatasetValidate(cmd) => commands::dataset_validate(cmd),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
