//! Library side of the `sta-harmonic` command. `main.rs` only parses the
//! arguments and maps errors to exit codes.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod table;

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

use crate::config::{Command, UsageError};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_REJECTED: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;

pub fn run(command: &Command) -> Result<commands::Outcome> {
    match command {
        Command::Design(a) => commands::design(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Scan(a) => commands::scan(a),
        Command::Otto(a) => commands::otto(a),
        Command::Verify(a) => commands::verify(a),
    }
}

pub fn output_path(command: &Command) -> Option<&Path> {
    let common = match command {
        Command::Design(a) | Command::Analyze(a) | Command::Verify(a) => a,
        Command::Scan(a) => &a.common,
        Command::Otto(a) => &a.common,
    };
    common.out.as_deref()
}

/// Exit status for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<sta_core::Error>() {
        Some(sta_core::Error::RejectedTrajectory { .. }) => EXIT_REJECTED,
        Some(
            sta_core::Error::InvalidSpec(_)
            | sta_core::Error::TauOutOfRange(_)
            | sta_core::Error::InvalidSweep(_)
            | sta_core::Error::NotAnExpansion,
        ) => EXIT_USAGE,
        _ => 1,
    }
}

/// Writes `text` to `path` through a temporary file in the same directory,
/// or to standard output.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
            tmp.write_all(text.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(path)
                .with_context(|| format!("renaming into {}", path.display()))?;
        }
    }
    Ok(())
}
