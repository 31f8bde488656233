//! Configuration-driven front end for the scattering-state lab.
//!
//! Exit codes: 0 pass, 1 lemma failure, 2 usage or config error,
//! 3 numerical conditioning.

pub mod commands;
pub mod config;
pub mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use commands::{Command, EXIT_CONDITIONING, EXIT_LEMMA, EXIT_OK, EXIT_USAGE};
pub use config::{parse_config, ExperimentConfig, Format, Overrides};

use commands::CliError;

/// Reads the config, runs `command`, writes the report to the configured path
/// (or `stdout`), and returns the exit code. Diagnostics go to `stderr`.
pub fn execute(
    command: Command,
    config_path: &Path,
    overrides: &Overrides,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> u8 {
    match execute_inner(command, config_path, overrides, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

fn execute_inner(
    command: Command,
    config_path: &Path,
    overrides: &Overrides,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<u8, CliError> {
    let source = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = parse_config(&source, overrides).map_err(|error| CliError::Config {
        path: config_path.display().to_string(),
        error,
    })?;
    let outcome = commands::run(command, &cfg)?;

    let write = |w: &mut dyn Write| -> std::io::Result<()> {
        match cfg.format {
            Format::Csv => outcome.report.write_csv(&mut *w),
            Format::Json => outcome.report.write_json(&mut *w),
        }
    };
    match &cfg.output_path {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        }
        None => write(stdout).map_err(|e| CliError::Usage(format!("cannot write output: {e}")))?,
    }

    for line in &outcome.summary {
        let _ = writeln!(stderr, "{line}");
    }
    if outcome.failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        for f in &outcome.failures {
            let _ = writeln!(stderr, "FAILED {f}");
        }
        Ok(EXIT_LEMMA)
    }
}
