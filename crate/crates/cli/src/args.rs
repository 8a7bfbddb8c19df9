use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{FormatChoice, LabeledPath, SetSpec, TrainOverrides};
use metaemb::{Method, OovFillStrategy};

#[derive(Debug, Parser)]
#[command(
    name = "metaemb",
    version,
    about = "Build and evaluate meta-embeddings"
)]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Vocabulary sizes, dimensions and OOV counts of the input sets.
    Info(InfoArgs),
    /// Build meta-embeddings with CONC, SVD, 1toN or 1toN+.
    Build(BuildArgs),
    /// Extend every set (or a meta-embedding file) to the union vocabulary.
    Extend(ExtendArgs),
    /// Word similarity (Spearman ρ × 100).
    EvalSim(EvalArgs),
    /// Word analogy accuracy with 3CosAdd.
    EvalAnalogy(EvalArgs),
    /// Rebuild over a grid of weights or dimensions and score on a dev set.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SetArgs {
    /// Input sets as name=path[:weight][:colnorm].
    #[arg(long, num_args = 1.., value_name = "SPEC")]
    pub sets: Vec<SetSpec>,

    /// Vector file format of every set.
    #[arg(long, value_name = "auto|plain|header")]
    pub format: Option<FormatChoice>,

    /// TOML file with defaults for any of these options.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Weight given to --favored sets.
    #[arg(long)]
    pub weight_scalar: Option<f64>,
    /// Relative improvement below which training stops early (0 disables).
    #[arg(long)]
    pub early_stop_tol: Option<f64>,
}

impl TrainArgs {
    pub fn overrides(&self) -> TrainOverrides {
        TrainOverrides {
            batch_size: self.batch_size,
            learning_rate: self.lr,
            l2_weight: self.l2,
            epochs: self.epochs,
            seed: self.seed,
            loss_weight_scalar: self.weight_scalar,
            early_stop_tol: self.early_stop_tol,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InfoArgs {
    #[command(flatten)]
    pub sets: SetArgs,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Options shared by `build` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct MetaArgs {
    #[command(flatten)]
    pub sets: SetArgs,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Meta-embedding dimensionality (SVD, 1toN, 1toN+).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Sets whose weight is multiplied by --weight-scalar.
    #[arg(long, num_args = 1.., value_name = "NAME")]
    pub favored: Vec<String>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub meta: MetaArgs,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExtendArgs {
    #[command(flatten)]
    pub sets: SetArgs,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<OovFillStrategy>,
    /// Extend this meta-embedding file (label=path) instead of the sets.
    #[arg(long)]
    pub meta: Option<LabeledPath>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Embedding files as label=path (or a bare path).
    #[arg(long, num_args = 1.., required = true, value_name = "EMB")]
    pub emb: Vec<LabeledPath>,
    /// Dataset files; relative paths are looked up under $METAEMB_DATA_DIR.
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub datasets: Vec<PathBuf>,
    #[arg(long, value_name = "auto|plain|header")]
    pub format: Option<FormatChoice>,
    /// Lowercase dataset words before lookup.
    #[arg(long)]
    pub lowercase: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file providing `datasets` and `lowercase`.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    /// Weight scalar of the favored sets.
    Weight,
    /// Meta-embedding dimensionality.
    Dim,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub meta: MetaArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Dev similarity dataset; defaults to MC30 in the data directory.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub lowercase: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: metaemb::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<OovFillStrategy, String> {
    s.parse().map_err(|e: metaemb::Error| e.to_string())
}
