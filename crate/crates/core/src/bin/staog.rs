//! Command-line front end. Exit codes: 0 success, 2 usage or format
//! error, 3 runtime error. `STAOG_THREADS` caps the worker pool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use staog::commands;

#[derive(Parser)]
#[command(name = "staog", version, about = "Spatio-temporal and-or graph action classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a bag-of-words codebook by k-means over all descriptors.
    Dict {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 300)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic labeled features file from a spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model per label (one-vs-rest) and write a manifest.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        /// JSON run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Manifest path; model files are written beside it.
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration training log (JSON lines).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score every video under every model and pick the best class.
    Predict {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print per-class accuracy and average precision.
    ///
    /// AP is the mean, over the class's videos, of the precision at each
    /// one's rank when all videos are sorted by that class's score.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("STAOG_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| format!("STAOG_THREADS must be a positive integer, got {value:?}"))?;
    if n == 0 {
        return Err("STAOG_THREADS must be >= 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Dict { features, k, seed, out } => commands::cmd_dict(&features, k, seed, &out),
        Command::Synth { spec, seed, out } => commands::cmd_synth(&spec, seed, &out),
        Command::Train { features, codebook, config, out, log } => {
            commands::cmd_train(&features, &codebook, config.as_deref(), &out, log.as_deref())
        }
        Command::Predict { models, features, out } => commands::cmd_predict(&models, &features, &out),
        Command::Eval { scores, features } => commands::cmd_eval(&scores, &features),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}
