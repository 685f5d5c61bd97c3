use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Parser)]
#[command(name = "spamlens", version, about = "Explainable image-spam detection")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for splitting, initialization, shuffling and explainer sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print a single JSON object on stdout instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// key = value file supplying defaults for any option.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode, deduplicate and normalize a labeled image corpus.
    Ingest(IngestArgs),
    /// Train the classifier and write a checkpoint plus per-epoch history.
    Train(TrainArgs),
    /// Confusion matrix and metrics for a checkpoint or a predictions file.
    Eval(EvalArgs),
    /// Explain one prediction with LIME, SHAP or an occlusion heatmap.
    Explain(ExplainArgs),
    /// Write a synthetic spam/normal corpus.
    GenSynthetic(GenArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus root containing spam/ and normal/.
    #[arg(long)]
    pub src: Option<PathBuf>,
    /// Directory to create with the normalized images.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus root containing spam/ and normal/.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Checkpoint file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON-lines history file (default: next to the checkpoint).
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitSel {
    Test,
    Train,
    All,
}

impl FromStr for SplitSel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Corpus root containing spam/ and normal/.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Which side of the seeded split to score.
    #[arg(long, value_enum)]
    pub split: Option<SplitSel>,
    /// Spam decision threshold on the predicted probability.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Score precomputed `label,prediction` lines instead of a model.
    #[arg(long, conflicts_with_all = ["checkpoint", "data"])]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Lime,
    Shap,
    Heatmap,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Image file to explain.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Output prefix; writes <prefix>.json and <prefix>.png.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Superpixel count for LIME and SHAP.
    #[arg(long)]
    pub segments: Option<usize>,
    /// Perturbations (LIME) or sampled coalitions (SHAP).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub kernel_width: Option<f64>,
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Non-zero LIME coefficients kept.
    #[arg(long)]
    pub features: Option<usize>,
    /// SHAP enumerates every coalition up to this many segments.
    #[arg(long)]
    pub exact_threshold: Option<usize>,
    #[arg(long)]
    pub patch: Option<usize>,
    /// Explain the pre-sigmoid logit instead of the spam probability; useful
    /// when confident predictions saturate the probability.
    #[arg(long)]
    pub logit: bool,
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Images per class.
    #[arg(long)]
    pub n: Option<usize>,
}
