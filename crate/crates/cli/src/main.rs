//! `sepcnn` command line: dataset handling, training, leave-one-subject-out
//! evaluation, and heatmap interpretation.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use sepcnn::Error;

#[derive(Parser)]
#[command(
    name = "sepcnn",
    version,
    about = "Interpretable separable-convolution CNN for cross-subject EEG drowsiness recognition"
)]
pub struct Cli {
    /// Base RNG seed for anything stochastic.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Model config as a JSON file (missing fields take defaults).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory for produced files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Training epochs.
    #[arg(long, global = true)]
    pub epochs: Option<usize>,

    /// Evaluation repeats (fresh initialisation each).
    #[arg(long, global = true)]
    pub repeats: Option<usize>,

    /// Worker threads for fold-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Create, inspect, import, or export sample containers.
    Dataset {
        #[command(subcommand)]
        action: commands::DatasetCmd,
    },
    /// Train a model on a container and write a checkpoint.
    Train {
        /// Training container (EEGB).
        #[arg(long)]
        data: PathBuf,
    },
    /// Leave-one-subject-out evaluation protocols.
    Eval {
        #[command(subcommand)]
        protocol: commands::EvalCmd,
    },
    /// Emit per-sample heatmaps (CSV + SVG + JSON).
    Interpret {
        /// Container holding the samples to interpret.
        #[arg(long)]
        data: PathBuf,
        /// Trained checkpoint.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Sample index (`7`) or inclusive range (`3-9`).
        #[arg(long)]
        sample: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        // Repeated initialisation (e.g. in tests) is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Numerical(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
