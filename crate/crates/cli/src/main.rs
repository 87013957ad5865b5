//! `debtstream` command-line interface.
//!
//! Exit codes: 0 success, 2 malformed input (with file and line), 3 input
//! that parses but violates a precondition, 4 a seeded command run without
//! `--seed`, 1 anything else.

mod args;
mod commands;
mod run;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use debtstream_core::Error;

use crate::args::Cli;
use crate::commands::MissingSeed;

const THREADS_VAR: &str = "DEBTSTREAM_THREADS";

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<MissingSeed>().is_some() {
        return 4;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Parse { .. }) => 2,
        Some(Error::Io(_) | Error::SingularSystem { .. } | Error::NoConvergence { .. }) => 1,
        Some(_) => 3,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| commands::dispatch(cli.command));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
