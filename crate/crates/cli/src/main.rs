//! `focir` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Problem with how the tool was invoked, reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "focir",
    version,
    about = "Zone-level ride-hailing demand and supply-demand gap forecasting"
)]
pub struct Cli {
    /// TOML run configuration with [data], [model], [train] and [synth] sections.
    #[arg(long, global = true, env = "FOCIR_CONFIG")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset with a planted spatial dependency.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Load raw tables, check them and print a summary.
    Ingest {
        #[arg(long)]
        data: PathBuf,
        /// Write the validated tables back out in canonical form.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a network and write a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// demand or gap.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss log (`epoch,train_loss,val_loss`).
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Score a checkpoint and both baselines on one split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Split::Test)]
        split: Split,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and score every model variant or feature combination.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Write feature importance scores of a checkpoint.
    Importance {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Directory for importance_spatial.csv and importance_temporal.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Predict every zone at one slot.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        slot: usize,
        /// Replace negative predictions with zero.
        #[arg(long)]
        clamp_zero: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
pub struct TrainOverrides {
    #[arg(long)]
    pub variant: Option<String>,
    /// Seeds both weight initialization and batch shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Model,
    Feature,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<focir::Error>() {
            return match e.kind() {
                focir::ErrorKind::Usage => 1,
                focir::ErrorKind::Data => 2,
                focir::ErrorKind::Numeric => 3,
            };
        }
        if cause.is::<UsageError>() || cause.is::<toml::de::Error>() {
            return 1;
        }
    }
    2
}

/// The error chain joined by `: `, skipping causes the previous message
/// already ends with.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if msg.ends_with(&text) {
            continue;
        }
        if !msg.is_empty() {
            msg.push_str(": ");
        }
        msg.push_str(&text);
    }
    msg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
