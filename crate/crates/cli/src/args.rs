use clap::{ArgGroup, Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "prediff", version, about = "Prediction difference analysis for image classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a Gaussian patch model to a directory of images.
    FitModel(FitModelArgs),
    /// Relevance of every pixel for a class.
    Explain(ExplainArgs),
    /// Relevance of every pixel for a hidden unit or feature map.
    Deepvis(DeepvisArgs),
    /// Gradient sensitivity map, for comparison with `explain`.
    Sensitivity(SensitivityArgs),
    /// Repeat an `explain` run from a configuration file or manifest.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct FitModelArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub l: usize,
    #[arg(long, default_value_t = 25_000)]
    pub count: usize,
    #[arg(long, default_value_t = prediff::patch_model::DEFAULT_EPSILON)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Quantile of |score| that saturates the heatmap.
    #[arg(long, default_value_t = prediff::imaging::DEFAULT_SATURATION_QUANTILE)]
    pub quantile: f64,
    /// Percentage of pixels kept by the mask.
    #[arg(long, default_value_t = 5.0)]
    pub top_percent: f64,
    /// Skip the overlay rendering.
    #[arg(long)]
    pub no_overlay: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["model", "marginal"])))]
pub struct ExplainArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Patch model file (conditional sampling).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Directory of images (marginal sampling).
    #[arg(long)]
    pub marginal: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 14)]
    pub l: usize,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Class index, or `auto` for the predicted class.
    #[arg(long, default_value = "auto")]
    pub class: String,
    #[arg(long, default_value = "output", value_parser = ["output", "logits"])]
    pub layer: String,
    #[arg(long, value_parser = ["conditional", "marginal"])]
    pub sampler: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Use raw probabilities in the log-odds.
    #[arg(long)]
    pub no_laplace: bool,
    #[command(flatten)]
    pub render: RenderArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("selector").required(true).args(["map", "unit"])))]
pub struct DeepvisArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub layer: String,
    /// Feature map index (convolutional layers only).
    #[arg(long)]
    pub map: Option<usize>,
    /// Flat unit index in the layer output.
    #[arg(long)]
    pub unit: Option<usize>,
    /// Average over this many randomly chosen units of the map.
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub render: RenderArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value = "auto")]
    pub class: String,
    #[command(flatten)]
    pub render: RenderArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}
