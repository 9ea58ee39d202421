use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Offline transmit-power scheduling for an energy-harvesting transmitter.
#[derive(Debug, Parser)]
#[command(name = "harvest-sched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Maximum bits by a deadline.
    Solve(SolveArgs),
    /// Earliest completion time for a bit target.
    Mintime(MintimeArgs),
    /// Optimal vs on-off vs unconstrained over a batch of generated scenarios.
    Compare(CompareArgs),
    /// Throughput-by-deadline and completion-time-by-bits curves.
    Sweep(SweepArgs),
    /// Energy tunnel table for step plots.
    Tunnel(TunnelArgs),
    /// Write a generated scenario as JSON.
    Generate(GenerateArgs),
    /// Grid-search the best per-epoch schedule and compare with the solver.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario JSON file.
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Generate a scenario, e.g. "emax=100,mu=5,T=10000[,peak=100]".
    #[arg(long, value_name = "SPEC")]
    gen: Option<String>,
}

#[derive(Debug, Args)]
struct Common {
    #[command(flatten)]
    source: Source,
    /// Seed for --gen.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rate function.
    #[arg(long, default_value = "awgn", value_name = "NAME")]
    rate: String,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Deadline; defaults to the generator horizon with --gen.
    #[arg(long, value_name = "T")]
    deadline: Option<f64>,
    /// Scheduler to run.
    #[arg(long, default_value = "optimal", value_name = "NAME")]
    policy: String,
    #[command(flatten)]
    onoff: OnOffArgs,
    /// Relative feasibility tolerance.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Policy output (.csv for CSV, JSON otherwise).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MintimeArgs {
    #[command(flatten)]
    common: Common,
    /// Bit target.
    #[arg(long, value_name = "B")]
    bits: f64,
    /// Relative feasibility tolerance.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Policy output (.csv for CSV, JSON otherwise).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Generator spec, e.g. "emax=100,mu=5,T=10000".
    #[arg(long, value_name = "SPEC")]
    gen: String,
    /// Base seed; scenario i uses seed XOR i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: u64,
    #[arg(long, default_value = "awgn", value_name = "NAME")]
    rate: String,
    #[command(flatten)]
    onoff: OnOffArgs,
    /// Tolerance on the ordering onoff <= optimal <= unconstrained.
    #[arg(long, default_value_t = 1e-9, value_name = "X")]
    tol: f64,
    /// Comparison CSV; printed to stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// First deadline of the grid.
    #[arg(long, value_name = "T")]
    from: f64,
    /// Last deadline of the grid.
    #[arg(long, value_name = "T")]
    to: f64,
    /// Points per curve.
    #[arg(long, default_value_t = 12, value_name = "N")]
    steps: usize,
    /// Bit grid start; defaults to the throughput at --from.
    #[arg(long, value_name = "B")]
    bits_from: Option<f64>,
    /// Bit grid end; defaults to the throughput at --to.
    #[arg(long, value_name = "B")]
    bits_to: Option<f64>,
    /// Allowed relative mismatch between the two curves.
    #[arg(long, default_value_t = 1e-6, value_name = "X")]
    tol: f64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TunnelArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add the cumulative spend of a schedule solved for this deadline.
    #[arg(long, value_name = "T", conflicts_with = "policy_file")]
    deadline: Option<f64>,
    /// Scheduler used with --deadline.
    #[arg(long, default_value = "optimal", value_name = "NAME")]
    policy: String,
    /// Add the cumulative spend of a policy JSON file.
    #[arg(long, value_name = "PATH")]
    policy_file: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_name = "SPEC")]
    gen: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "T")]
    deadline: f64,
    /// Power grid step.
    #[arg(long, default_value_t = 0.01, value_name = "DELTA")]
    step: f64,
    /// Largest grid power; defaults to total harvest over the shortest epoch.
    #[arg(long, value_name = "P")]
    cap: Option<f64>,
    /// Report JSON; printed to stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LevelKind {
    /// Harvest before the deadline over the deadline.
    Realized,
    /// Mean packet energy over mean gap, from the generator parameters.
    Expected,
}

#[derive(Debug, Args)]
struct OnOffArgs {
    /// How the on-off baseline sets its level.
    #[arg(long, value_enum, default_value = "realized")]
    onoff_level: LevelKind,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
