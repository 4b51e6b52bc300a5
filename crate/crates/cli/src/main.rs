//! `affectsim` command-line driver.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on configuration or
//! usage errors.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "affectsim",
    version,
    about = "Emotion propagation on weighted complex networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one seeded simulation and write its trace, bands and graph exports.
    Simulate(SimulateArgs),
    /// Integrate the mean-field ignorant/spreader equations.
    Meanfield(MeanfieldArgs),
    /// Tally an election vote over a final ETV file.
    Vote(VoteArgs),
    /// Run several seeds and aggregate the mean-ETV series.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML configuration file.
    pub config: PathBuf,
    /// Overrides both the config seed and AFFECTSIM_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MeanfieldArgs {
    /// Optional TOML configuration supplying gamma_forget and [meanfield].
    pub config: Option<PathBuf>,
    /// A constant rate, or `from-trace <beta.csv>` to replay a simulated
    /// per-round mean rate.
    #[arg(long, num_args = 1..=2, value_names = ["BETA", "PATH"], required = true)]
    pub beta: Vec<String>,
    /// Forgetting probability; defaults to the config's gamma_forget.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Initial spreader fraction.
    #[arg(long)]
    pub i0: Option<f64>,
    /// Integration horizon in rounds.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// RK4 step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VoteArgs {
    /// `node,etv` CSV, e.g. the final_etvs.csv written by `simulate`.
    pub etvs: PathBuf,
    /// Abstention probability for undecided voters.
    #[arg(long, default_value_t = affectsim::analysis::DEFAULT_P_ABSTAIN)]
    pub p_abstain: f64,
    /// Seed of the first tally; tally k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of independent tallies.
    #[arg(long, default_value_t = 1)]
    pub repeats: u64,
    /// Code length of the ETVs.
    #[arg(long, default_value_t = 32)]
    pub m: u32,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML configuration file.
    pub config: PathBuf,
    /// Number of runs; run k uses master seed + k.
    #[arg(long)]
    pub seeds: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Master seed; overrides both the config seed and AFFECTSIM_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Meanfield(a) => commands::meanfield(&a),
        Command::Vote(a) => commands::vote(&a),
        Command::Sweep(a) => commands::sweep(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) | CliError::Core(affectsim::Error::Config { .. }) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
