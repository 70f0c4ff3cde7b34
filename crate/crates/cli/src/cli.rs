use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fewbody", version, about = "Few-body cluster dynamics workbench")]
pub struct Cli {
    /// Directory for artifacts and `manifest.jsonl`.
    #[arg(long, env = "FEWBODY_OUT_DIR", default_value = ".", global = true)]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Three-particle kinematical collision model.
    #[command(subcommand)]
    Kin(KinCommand),
    /// N-body integration.
    #[command(subcommand)]
    Nbody(NbodyCommand),
    /// Analyses of a stored trajectory.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Set-partition lattice queries.
    #[command(subcommand)]
    Partitions(PartitionsCommand),
}

#[derive(Debug, Subcommand)]
pub enum KinCommand {
    /// Simulate collisions and write one JSON line per collision.
    Run(KinRunArgs),
    /// Check a stored collision trace.
    Verify(KinVerifyArgs),
}

#[derive(Debug, Args)]
pub struct KinRunArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of collisions.
    #[arg(long = "k")]
    pub k: Option<usize>,
    /// Independent runs with seeds derived from the master seed.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Worker threads for batches.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Trace path for a single run.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KinVerifyArgs {
    pub trace: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum NbodyCommand {
    /// Integrate a scenario and write one JSON line per accepted step.
    Run(NbodyRunArgs),
}

#[derive(Debug, Args)]
pub struct NbodyRunArgs {
    pub config: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Cluster function timeline.
    Graf(AnalyzeArgs),
    /// Messenger episodes with diagnostics and surface crossings.
    Episodes(AnalyzeArgs),
    /// Poincaré surface crossings.
    Poincare(AnalyzeArgs),
    /// von Zeipel series.
    Vonzeipel(AnalyzeArgs),
}

impl AnalyzeCommand {
    pub fn name(&self) -> &'static str {
        match self {
            AnalyzeCommand::Graf(_) => "graf",
            AnalyzeCommand::Episodes(_) => "episodes",
            AnalyzeCommand::Poincare(_) => "poincare",
            AnalyzeCommand::Vonzeipel(_) => "vonzeipel",
        }
    }

    pub fn args(&self) -> &AnalyzeArgs {
        match self {
            AnalyzeCommand::Graf(a)
            | AnalyzeCommand::Episodes(a)
            | AnalyzeCommand::Poincare(a)
            | AnalyzeCommand::Vonzeipel(a) => a,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Trajectory in JSON-lines form.
    pub trajectory: PathBuf,
    /// Config with at least a `system` section.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Surface indices, comma separated.
    #[arg(long = "m", value_delimiter = ',')]
    pub m: Vec<u32>,
    /// Angular momentum cap.
    #[arg(long = "L")]
    pub ell: Option<f64>,
    /// Messenger tuple as JSON, 1-based, e.g. `[[1],[2],[3,4]]`.
    #[arg(long)]
    pub tuple: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum PartitionsCommand {
    /// All partitions of `{1..n}`, one per line.
    List {
        #[arg(long)]
        n: usize,
        /// Keep only partitions with this many blocks.
        #[arg(long)]
        rank: Option<usize>,
    },
    /// All ordered messenger tuples of `{1..n}`, one per line.
    Tuples {
        #[arg(long)]
        n: usize,
    },
}
