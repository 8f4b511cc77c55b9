use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weighted_fock::cli::{self, Experiment, ExperimentConfig, Overrides, Status};

#[derive(Parser)]
#[command(name = "weighted-fock", version, about = "Kernel and pointwise-bound experiments for weighted Fock spaces")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for the CSV and JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    degree: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Kernel diagonal K_N(z, z) on a grid.
    KernelDiag,
    /// Global pointwise-bound certificate.
    VerifyBound,
    /// B, its bracket, Phi(0) and -M/4.
    Constants,
    /// Equivalence of two weights and the multiplier between them.
    Equivalence,
    /// Potential bounds and the Poisson residual.
    Potential,
    /// Mean-value property of sample holomorphic functions.
    MeanValue,
    /// One row per entry of `configs`.
    Sweep,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::KernelDiag => Experiment::KernelDiag,
            Command::VerifyBound => Experiment::VerifyBound,
            Command::Constants => Experiment::Constants,
            Command::Equivalence => Experiment::Equivalence,
            Command::Potential => Experiment::Potential,
            Command::MeanValue => Experiment::MeanValue,
            Command::Sweep => Experiment::Sweep,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        resolution: args.resolution,
        degree: args.degree,
    };
    let base = match &args.config {
        Some(path) => match cli::load_config(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("{e}");
                return exit(Status::ConfigError);
            }
        },
        None => ExperimentConfig::default(),
    };
    let cfg = match cli::resolve(base, args.command.into(), &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return exit(Status::ConfigError);
        }
    };
    exit(cli::run(&cfg, &args.out))
}

fn exit(status: Status) -> ExitCode {
    ExitCode::from(status.exit_code() as u8)
}
