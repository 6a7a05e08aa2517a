//! `ehf`: solve, simulate, learn and sweep energy-aware transmission policies.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when
//! `analyze` finds a failing check.

mod commands;
mod policies;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "ehf",
    version,
    about = "Energy-aware transmission policies for energy-harvesting sensors"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML configuration file; omitted keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulated slots per run.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub horizon: u64,
    /// Sweep axis, e.g. `d=100,150,200`.
    #[arg(long, global = true)]
    pub sweep: Option<String>,
    /// Comma-separated policies: optimal, greedy, learned, each optionally `:r=N`.
    #[arg(long, global = true, default_value = "optimal")]
    pub policies: String,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Fail instead of clamping when an action exceeds the battery.
    #[arg(long, global = true)]
    pub strict_causality: bool,
    /// Write a per-slot trace from `simulate`.
    #[arg(long, global = true)]
    pub trace: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal policy by relative value iteration.
    Solve,
    /// Monte Carlo run of each policy in `--policies`.
    Simulate,
    /// R-learning with a learning curve.
    Learn {
        /// Overrides `rl.iterations`.
        #[arg(long)]
        iterations: Option<u64>,
    },
    /// Gains of several policies along one parameter axis.
    Sweep,
    /// Retransmission checks in the energy-unconstrained regime.
    Analyze {
        /// Largest r in the comparison sweep.
        #[arg(long, default_value_t = 8)]
        max_r: u32,
    },
    /// Expected distortion and energy for every (q, k).
    AnalyzeTradeoff,
}

pub enum Outcome {
    Ok,
    VerificationFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
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
    let result = match &cli.command {
        Command::Solve => commands::solve(&cli.common),
        Command::Simulate => commands::simulate(&cli.common),
        Command::Learn { iterations } => commands::learn(&cli.common, *iterations),
        Command::Sweep => commands::sweep(&cli.common),
        Command::Analyze { max_r } => commands::analyze(&cli.common, *max_r),
        Command::AnalyzeTradeoff => commands::analyze_tradeoff(&cli.common),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
