use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "mfh",
    version,
    about = "Music feature detection with a Hebbian network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract per-track features from a label-per-directory WAV dataset.
    Extract {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads; 0 uses every logical core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Encode features, split, and train a network.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evaluate a trained model on the held-out split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the worked examples; needs no audio.
    Reproduce,
    /// Time the forward pass for several input widths.
    Bench {
        /// Comma-separated input widths.
        #[arg(long, default_value = "8,64,512")]
        sizes: String,
        #[arg(long, default_value_t = 8)]
        outputs: usize,
        #[arg(long, default_value_t = 101)]
        reps: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract {
            dataset,
            out,
            config,
            jobs,
        } => commands::extract(dataset.as_deref(), &out, config.as_deref(), jobs),
        Command::Train {
            features,
            out,
            config,
        } => commands::train(&features, &out, config.as_deref()),
        Command::Eval {
            model,
            features,
            out,
        } => commands::eval(&model, &features, &out),
        Command::Reproduce => commands::reproduce(),
        Command::Bench {
            sizes,
            outputs,
            reps,
        } => commands::bench(&sizes, outputs, reps),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            if code != commands::REPRODUCTION_FAILED {
                log::error!("{error:#}");
            }
            ExitCode::from(code)
        }
    }
}
