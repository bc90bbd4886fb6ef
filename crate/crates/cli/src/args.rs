use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "fusekit",
    version,
    about = "LiDAR / feed-forward reconstruction fusion toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene: input files, manifest and ground truth.
    Synth(SynthArgs),
    /// Pose pairing, Sim(3) alignment and scale consensus.
    Prefuse(StageArgs),
    /// Pre-fusion followed by scale-regularized ICP of each session.
    Register(StageArgs),
    /// Registration followed by the global pose graph.
    Optimize(StageArgs),
    /// Color and geometry metrics of a cloud against a reference.
    Evaluate(EvaluateArgs),
    /// Every stage, ending with the fused cloud.
    Pipeline(StageArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `section.key = value` settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the settings.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory receiving the scene files.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory receiving reports and stage outputs; the text report goes to
    /// standard output either way.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scale regularization weight in [0, 1].
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Cloud under evaluation.
    #[arg(long)]
    pub cloud: PathBuf,
    /// Reference cloud; defaults to the manifest's LiDAR cloud.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub rg: Option<f64>,
    #[arg(long)]
    pub voxel: Option<f64>,
    /// Distance gate for overlap fitness, meters.
    #[arg(long, default_value_t = 0.1)]
    pub gate: f64,
}
