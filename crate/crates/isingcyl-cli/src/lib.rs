//! Batch runner for the `isingcyl` library: every subcommand emits a JSON
//! report (and optionally CSV tables) carrying a metadata header, and in
//! verify mode runs independent oracles next to the main computation.

pub mod args;
pub mod commands;
pub mod output;

use std::fmt;

pub use args::{Cli, Command};
pub use output::{Check, Outcome};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Verify(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 1,
            Failure::Verify(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(s) => write!(f, "configuration error: {s}"),
            Failure::Verify(s) => write!(f, "verification failed: {s}"),
            Failure::Numerical(s) => write!(f, "numerical failure: {s}"),
            Failure::Io(s) => write!(f, "i/o error: {s}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<isingcyl::Error> for Failure {
    fn from(e: isingcyl::Error) -> Self {
        if e.is_numerical() || matches!(e, isingcyl::Error::Budget(_)) {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Failure>;

/// Honour `ISINGCYL_THREADS` for the worker pool of the library.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("ISINGCYL_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Config(format!("ISINGCYL_THREADS: expected a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("ISINGCYL_THREADS: {e}")))?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    let out = match &cli.command {
        Command::Propagator(a) => commands::propagator::run(a)?,
        Command::Partition(a) => commands::partition::run(a)?,
        Command::Correlate(a) => commands::correlate::run(a)?,
        Command::Scaling(a) => commands::scaling::run(a)?,
        Command::Multiscale(a) => commands::multiscale::run(a)?,
        Command::Kernels(a) => commands::kernels::run(a)?,
        Command::Selftest(a) => commands::selftest::run(a)?,
    };
    out.emit()
}
