//! Library side of the `nbrw` command-line tool: configuration, the
//! subcommands and report rendering. The binary only parses arguments.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::fs::File;
use std::io::{BufWriter, Write};

pub use commands::{run, Command};
pub use config::{DegreeSpec, ExperimentConfig, Format, Starts, TMax};
pub use error::{CliError, CliResult};
pub use output::Report;

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Writes the report records to the configured path, or to stdout.
pub fn emit(report: &Report, cfg: &ExperimentConfig) -> CliResult<()> {
    match cfg.out_path() {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            report.write_to(cfg.format(), &mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report.write_to(cfg.format(), &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// Runs a command end to end and returns the process exit code.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> i32 {
    let result = run(command, cfg).and_then(|report| {
        emit(&report, cfg)?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            eprintln!("{}", report.summary_line());
            if report.pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
