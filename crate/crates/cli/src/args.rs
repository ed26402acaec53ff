use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dser_core::LossKind;

#[derive(Debug, Parser)]
#[command(
    name = "dser",
    version,
    about = "Dimensional speech emotion recognition experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract 68-dimensional pAA features for every manifest row.
    Extract(ExtractArgs),
    /// Train one model and evaluate it on the held-out session.
    Train(TrainArgs),
    /// Evaluate a saved checkpoint on the held-out session.
    Eval(EvalArgs),
    /// Search the multitask weights on the 0.1 lattice.
    Grid(GridArgs),
    /// Train every (dataset, feature set, loss) cell listed in a JSON plan.
    Matrix(MatrixArgs),
    /// Compare the three losses on seeded synthetic corpora.
    SynthBench(SynthBenchArgs),
    /// Valence/arousal scatter of gold labels and predictions.
    Scatter(ScatterArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Base directory for relative WAV paths (default: the manifest's directory).
    #[arg(long)]
    pub wav_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 50.0)]
    pub frame_ms: f64,
    #[arg(long, default_value_t = 25.0)]
    pub hop_ms: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Corpus selection shared by the data-driven commands.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// `paa` to extract from the manifest's WAVs, or `csv:PATH`.
    #[arg(long, default_value = "paa")]
    pub features: String,
    #[arg(long)]
    pub wav_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub test_session: u32,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
}

/// Training overrides applied on top of `--config`.
#[derive(Debug, Clone, Args)]
pub struct TrainOpts {
    /// JSON file with TrainConfig fields; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub loss: Option<LossKind>,
    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub opts: TrainOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Seed of the validation shuffle; only affects which partition is which.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub opts: TrainOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    /// JSON plan: `{"train": {..}, "losses": [..], "parts": [..]}`.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthBenchArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
