//! Command-line runner for the `chenlee` experiments.
//!
//! Exit status: 0 when every pass criterion held, 1 when one did not, 2 for bad
//! input or a violated precondition, 3 for a numerical failure, 4 for I/O.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

use std::ffi::OsString;

pub use config::Config;
pub use error::CliError;
pub use manifest::{parse_manifest, Command, RunManifest};
pub use run::{run, RunOutcome};

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "CHENLEE_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    // A pool built earlier in the same process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let manifest = match parse_manifest(args) {
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { error::EXIT_PRECONDITION } else { 0 };
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
        Ok(Ok(m)) => m,
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match run::run(&manifest) {
        Ok(outcome) => {
            println!(
                "{}: {} (output in {})",
                manifest.command.name(),
                if outcome.pass { "pass" } else { "FAIL" },
                manifest.out.display()
            );
            if outcome.pass {
                0
            } else {
                error::EXIT_CRITERIA
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Err(w) = run::write_failure(&manifest, &e) {
                eprintln!("error: could not write failure record: {w}");
            }
            e.exit_code()
        }
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
