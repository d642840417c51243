use std::path::PathBuf;

use clap::{Parser, Subcommand};

use nfcsim_core::roleswitch::DEFAULT_THRESHOLD;

use crate::report::Format;

#[derive(Debug, Parser)]
#[command(name = "nfcsim", version, about = "NFC role-switching and offloading simulator")]
pub struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Exit with status 1 if any experiment fails at a role switch.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Override the scenario repeat count.
    #[arg(long, global = true)]
    pub repeats: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the round-trip experiment of a scenario.
    Simulate { scenario: PathBuf },
    /// Fit readiness curves to success-rate tables and recommend delays.
    Calibrate {
        /// Tables file; the built-in reference tables when omitted.
        tables: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Compare both role-switching protocols across payload sizes.
    CompareProtocols { scenario: PathBuf },
    /// Compare local execution with offloading for a workload.
    OffloadBench { scenario: PathBuf },
}
