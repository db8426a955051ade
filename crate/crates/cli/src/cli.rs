use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nepdf_core::eval::EvalMode;
use nepdf_core::simgen::Structure;

#[derive(Debug, Parser)]
#[command(name = "nepdf", version, about = "Causal direction from normalized joint density matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate structural-equation systems and write their labeled pairs.
    Simulate(SimulateArgs),
    /// Generate spline-mechanism cause-effect pairs (all labeled -1).
    Synth(SynthArgs),
    /// Convert a Tübingen-style directory into a dataset file.
    Convert(ConvertArgs),
    /// Train a model (or a causal/dependence model pair) on a dataset.
    Train(TrainArgs),
    /// Score a dataset with trained model(s) and write a report.
    Eval(EvalArgs),
    /// Cross-validate on simulated or file data, optionally over a grid.
    Benchmark(BenchmarkArgs),
    /// Compare analytic and finite-difference gradients on a small network.
    Gradcheck(GradcheckArgs),
}

fn parse_structure(s: &str) -> Result<Structure, String> {
    s.parse().map_err(|e: nepdf_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON run configuration; flags override its `simulate` section.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// v, chain or reverse-v.
    #[arg(long, value_parser = parse_structure)]
    pub structure: Option<Structure>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub systems: Option<usize>,
    /// Time steps kept per system.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub lag: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of pairs.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Metadata table (`pairmeta.txt`).
    #[arg(long)]
    pub meta: PathBuf,
    /// Directory holding the `pairNNNN.txt` files; defaults to the
    /// metadata file's directory.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Flags shared by commands that train networks.
#[derive(Debug, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset file; overrides the config's data source.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Bins per axis.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add transposed twins (true/false).
    #[arg(long)]
    pub augment: Option<bool>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: TrainOverrides,
    /// Model output path; chalearn mode writes `<model>.causal` and
    /// `<model>.ind`. History goes to `<model>.history.csv`.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model path as given to `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Report JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Scores CSV path; defaults to the report path with `.scores.csv`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Also score each pair's transposed twin.
    #[arg(long)]
    pub augment: bool,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub common: TrainOverrides,
    /// Coefficient cells `alpha,beta[,gamma]` separated by `;`. Requires a
    /// `simulate` section.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturb the analytic gradient of the named parameter array.
    #[arg(long, hide = true)]
    pub corrupt: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    ThreeClass,
    Binary,
    Chalearn,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ThreeClass => EvalMode::ThreeClass,
            ModeArg::Binary => EvalMode::Binary,
            ModeArg::Chalearn => EvalMode::Chalearn,
        }
    }
}
