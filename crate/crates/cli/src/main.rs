//! `cmdp`: validate models, synthesize policies, simulate them and build grid instances.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cmdp_core::lp::SolverOptions;

#[derive(Debug, Parser)]
#[command(name = "cmdp", version, about = "Policy synthesis for finite-horizon MDPs with density caps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file and print every problem found.
    Validate { model: PathBuf },
    /// Synthesize a policy and write it as JSON.
    Synth(SynthArgs),
    /// Propagate densities under a policy and write CSV and JSON summaries.
    Simulate(SimulateArgs),
    /// Write a grid navigation model.
    Grid(GridArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Unconstrained,
    Constrained,
    Projected,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Unconstrained => "unconstrained",
            Mode::Constrained => "constrained",
            Mode::Projected => "projected",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Smallest pivot the simplex accepts.
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pivot_tol: f64,
    /// Phase-1 residual above which a stage LP counts as infeasible.
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    feasibility_tol: f64,
    /// Reduced-cost tolerance of the optimality test.
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    optimality_tol: f64,
}

impl SolverArgs {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            pivot_tol: self.pivot_tol,
            feasibility_tol: self.feasibility_tol,
            optimality_tol: self.optimality_tol,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
#[group(required = false, multiple = false)]
pub struct StartArgs {
    /// Start in a single state (zero-based index).
    #[arg(long)]
    start_state: Option<usize>,
    /// Start from the density stored in a JSON array.
    #[arg(long)]
    start_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    model: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(short, long)]
    out: PathBuf,
    /// Also record the certified reward from this start.
    #[command(flatten)]
    start: StartArgs,
    /// Dump every simplex pivot of the stage LPs to this file.
    #[arg(long)]
    lp_trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    model: PathBuf,
    policy: PathBuf,
    #[command(flatten)]
    start: StartArgs,
    /// Output files are `<prefix>_trajectory.csv`, `<prefix>_reward.csv` and `<prefix>_summary.json`.
    #[arg(long)]
    out_prefix: PathBuf,
    /// Monte Carlo rollouts; 0 skips the estimate.
    #[arg(long, default_value_t = 0)]
    rollouts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, required_unless_present = "paper")]
    rows: Option<usize>,
    #[arg(long, required_unless_present = "paper")]
    cols: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    /// The 3×3 swarm instance with its rewards and caps.
    #[arg(long, conflicts_with_all = ["rows", "cols", "stage_rewards", "terminal_rewards", "caps"])]
    paper: bool,
    /// Comma-separated reward per cell (default 0).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    stage_rewards: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    terminal_rewards: Option<Vec<f64>>,
    /// Comma-separated density caps (default 1 everywhere).
    #[arg(long, value_delimiter = ',')]
    caps: Option<Vec<f64>>,
    #[arg(short, long)]
    out: PathBuf,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { model } => commands::validate(&model),
        Command::Synth(args) => commands::synth(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Grid(args) => commands::grid(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
