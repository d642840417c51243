//! Command-line harness for the NFC offloading simulator: scenario files,
//! experiment commands and report output.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

use std::fs;
use std::io::Write;

pub use args::{Cli, Command};
pub use commands::{calibrate_tables, compare_protocols, offload_bench, simulate, ModelFile, Overrides};
pub use error::CliError;
pub use report::{Format, Report, Row};
pub use scenario::Scenario;

/// Exit status for a successful run.
pub const EXIT_OK: u8 = 0;
/// Exit status when `--strict` is set and an experiment failed.
pub const EXIT_STRICT: u8 = 1;
/// Exit status for unreadable or invalid configuration.
pub const EXIT_CONFIG: u8 = 2;

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
    }
}

/// Runs one command and returns the process exit status.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        repeats: cli.repeats,
        trace: log::log_enabled!(log::Level::Trace),
    };
    let report = match &cli.command {
        Command::Simulate { scenario } => simulate(&Scenario::load(scenario)?, overrides)?,
        Command::CompareProtocols { scenario } => compare_protocols(&Scenario::load(scenario)?, overrides)?,
        Command::OffloadBench { scenario } => offload_bench(&Scenario::load(scenario)?, overrides)?,
        Command::Calibrate { tables, threshold } => {
            let model = calibrate_tables(tables.as_deref(), *threshold)?;
            for r in &model.recommendation {
                match r.delay_ms {
                    Some(d) => eprintln!("recommended {} = {d} ms for {}", r.parameter.as_str(), r.variant),
                    None => eprintln!(
                        "no {} delay reaches a success rate of {} for {}",
                        r.parameter.as_str(),
                        threshold,
                        r.variant
                    ),
                }
            }
            emit(cli, &model.to_toml()?)?;
            return Ok(EXIT_OK);
        }
    };
    emit(cli, &report.to_string(cli.format)?)?;
    if cli.strict && report.had_failures {
        log::error!("an experiment failed at a role switch");
        return Ok(EXIT_STRICT);
    }
    Ok(EXIT_OK)
}
