//! Command-line front end: decompositions on CSV files, simulation studies
//! and metric plots.

pub mod args;
pub mod decompose;
pub mod provenance;
pub mod report;
pub mod simulate;
pub mod svg;

use std::io::Write;

use causal_decomp::{DecompError, Result};

pub use args::{Cli, Command};

/// Version of the JSON documents this tool writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CDECOMP_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| DecompError::Validation(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| DecompError::Validation(format!("cannot size thread pool: {e}")))
}

/// Runs one command, writing human-readable output to `out` and diagnostics to `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Decompose(a) => decompose::run(a, out, err),
        Command::Simulate(a) => simulate::run(a, out, err).map(|_| ()),
        Command::Report(a) => report::run(a, out),
    }
}
