//! Batch interface to the reconstruction toolkit: simulate a dataset,
//! reconstruct it with any method, score the result, or run the
//! interpolation protocols. One command is one process; everything they
//! share lives on the filesystem. Diagnostics go to stderr, data to files.

mod artifacts;
mod config;
mod error;
mod evaluate;
mod preview;
mod reconstruct;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Method, RunConfig};
use error::Result;

#[derive(Parser)]
#[command(name = "dainr", version, about = "Ground-truth-free dynamic MRI reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML, dotted keys); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for this command's artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Write into an existing non-empty output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct TrainFlags {
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the reconstruction method.
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Override train.iterations.
    #[arg(long)]
    iters: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a phantom dataset directory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override sampling.spokes.
        #[arg(long)]
        spokes: Option<usize>,
    },
    /// Reconstruct a dataset with the configured method.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Reconstruct, then infer the frames or pixels nobody measured.
    Interpolate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Score a reconstruction directory against its dataset.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
}

fn load_with_train_flags(common: &Common, flags: &TrainFlags) -> Result<RunConfig> {
    let mut config = RunConfig::load(common.config.as_deref())?;
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if let Some(method) = flags.method {
        config.method = method;
    }
    if let Some(iters) = flags.iters {
        config.train.iterations = iters;
    }
    Ok(config)
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { common, seed, spokes } => {
            let mut config = RunConfig::load(common.config.as_deref())?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(spokes) = spokes {
                config.sampling.spokes = spokes;
            }
            simulate::run(&config, &common.out, common.force)
        }
        Command::Reconstruct { common, train } => {
            let config = load_with_train_flags(&common, &train)?;
            reconstruct::run(&config, &common.out, common.force, false)
        }
        Command::Interpolate { common, train } => {
            let config = load_with_train_flags(&common, &train)?;
            reconstruct::run(&config, &common.out, common.force, true)
        }
        Command::Evaluate { common } => {
            let config = RunConfig::load(common.config.as_deref())?;
            evaluate::run(&config, &common.out, common.force)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
