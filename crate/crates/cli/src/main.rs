mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adc", version, about = "Grid quorum duty cycling: quorums, schedules and simulation")]
struct Cli {
    /// Print machine-readable JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lay out grid quorums for a period and check rotation closure.
    Qs(QsArgs),
    /// Build and validate a schedule for an edge-list topology.
    Schedule(ScheduleArgs),
    /// Run one simulation from a JSON config.
    Simulate(SimulateArgs),
    /// Run an ADC/LPL sweep from a JSON spec and write one CSV row per run.
    Sweep(SweepArgs),
    /// Run the rendezvous property suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
pub struct OutArgs {
    /// Directory for artifacts and manifests.
    #[arg(long, env = "ADC_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Artifact path; overrides the name derived from the input.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct QsArgs {
    /// Slots per period.
    #[arg(long)]
    pub m: usize,
    /// Demand fraction d/R in (0, 1]; repeat for several nodes.
    #[arg(long = "demand")]
    pub demands: Vec<f64>,
    /// Check closure over every quorum the grid can build, not just the listed ones.
    #[arg(long)]
    pub verify_closure: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModelArg {
    RtsCts,
    Protocol,
    Physical,
}

#[derive(Args)]
pub struct ScheduleArgs {
    /// Edge-list topology file.
    pub topology: PathBuf,
    #[arg(long, value_enum, default_value = "rts-cts")]
    pub model: ModelArg,
    /// Hop radius for the physical model.
    #[arg(long, default_value_t = 2)]
    pub phi: usize,
    /// Ranges for the protocol model; default to the file's own.
    #[arg(long)]
    pub comm_range: Option<f64>,
    #[arg(long)]
    pub interference_range: Option<f64>,
    /// Slots per period; chosen from the largest region when absent.
    #[arg(long)]
    pub m: Option<usize>,
    /// Rows per quorum.
    #[arg(long, default_value_t = 1)]
    pub rows: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// JSON simulation config.
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct SweepArgs {
    /// JSON sweep spec.
    pub spec: PathBuf,
    /// Parallel runs; all cores when absent.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Periods to check.
    #[arg(long = "m", value_delimiter = ',', default_values_t = [4usize, 9, 16, 25, 36, 100])]
    pub periods: Vec<usize>,
    /// Demand grid step.
    #[arg(long, default_value_t = 0.05)]
    pub demand_step: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Qs(a) => commands::qs(a, cli.json),
        Command::Schedule(a) => commands::schedule(a, cli.json),
        Command::Simulate(a) => commands::simulate(a, cli.json),
        Command::Sweep(a) => commands::sweep(a, cli.json),
        Command::Verify(a) => commands::verify(a, cli.json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
