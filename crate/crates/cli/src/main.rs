//! `lie-gdt`: evaluate geodesic losses, check their gradients, sample warps,
//! tabulate geodesics and run the desk-scale trainer from the shell.
//!
//! Exit codes: 0 on success, 1 on a numerical/domain failure, 2 on a usage,
//! file or parse error. Verbosity is controlled by `LIE_GDT_LOG`.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lie_gdt::batch::LossMode;
use lie_gdt::train::LossKind;

#[derive(Parser, Debug)]
#[command(
    name = "lie-gdt",
    version,
    about = "Geodesic losses on the homography group"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct LossWeights {
    /// Weight of the projection residual.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Exponent of the rotation angle (1 or 2).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    angle_power: u8,
}

/// Overrides applied on top of the defaults or a `--config` file.
#[derive(Args, Debug, Clone)]
struct TrainFlags {
    /// Training configuration file (.json or .toml).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    steps: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    angle_power: Option<u8>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    image_size: Option<usize>,
    #[arg(long)]
    eval_pairs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Loss value and gradient between two matrix files.
    Loss {
        /// Target transformation (JSON, nine row-major reals).
        #[arg(long)]
        t: PathBuf,
        /// Estimated transformation (JSON, nine row-major reals).
        #[arg(long)]
        that: PathBuf,
        #[command(flatten)]
        weights: LossWeights,
        #[arg(long, default_value = "surrogate")]
        mode: LossMode,
        /// Report a zero gradient for the ninth entry of `that`.
        #[arg(long)]
        fixed_last: bool,
    },
    /// Compare analytic gradients with central differences on random pairs.
    Gradcheck {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value = "surrogate")]
        mode: LossMode,
        #[command(flatten)]
        weights: LossWeights,
        /// Largest accepted relative error.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
    },
    /// Draw one synthetic image and random warp; write both images and the parameters.
    Sample {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the geodesic from one homography to another as CSV.
    Geodesic {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        /// Number of evenly spaced points including both ends.
        #[arg(long, default_value_t = 11)]
        points: usize,
        /// CSV destination; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the Siamese decoder and write the loss series and a summary.
    Train {
        #[command(flatten)]
        flags: TrainFlags,
        #[arg(long)]
        loss: Option<LossKind>,
    },
    /// Train one model per loss on identical seeds and compare them.
    Bench {
        #[command(flatten)]
        flags: TrainFlags,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LIE_GDT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
