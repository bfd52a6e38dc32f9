use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "clusterpath", version, about = "Cluster-path interpretability and OOD detection")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "CLUSTERPATH_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster every layer of a bundle and save the path model.
    Fit(FitArgs),
    /// Write each sample's cluster path.
    Assign(AssignArgs),
    /// Path complexity, unique paths, coverage curve and purity.
    Metrics(MetricsArgs),
    /// Decision-alignment faithfulness, full path and final layer only.
    Daf(DafArgs),
    /// Mean path agreement between a reference and a perturbed bundle.
    Agreement(AgreementArgs),
    /// Fit the OOD index (per-layer summary mixtures and path counts).
    OodFit(OodFitArgs),
    /// Score every sample of a bundle against an OOD index.
    OodScore(OodScoreArgs),
    /// AUROC, AUPR and FPR at 95% TPR for inlier vs outlier bundles.
    OodEval(OodEvalArgs),
    /// Generate a synthetic bundle with planted paths.
    Synth(SynthArgs),
    /// Add Gaussian noise to every activation of a bundle.
    Perturb(PerturbArgs),
    /// Export path table, Sankey flows and divergence groups.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelChoice {
    Labels,
    Predictions,
    None,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterOpts {
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Clusters per layer; a single value applies to every layer.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub cluster: ClusterOpts,
    /// Output directory for the model artifact.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFormat {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct AssignArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, value_enum, default_value_t = PathFormat::Csv)]
    pub format: PathFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, value_enum, default_value_t = LabelChoice::Labels)]
    pub label_source: LabelChoice,
    /// Also write the path table as CSV.
    #[arg(long)]
    pub table_csv: Option<PathBuf>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DafArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    /// Fraction of samples used to train the proxy.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AgreementArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub pert: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct OodFitArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Mixture components per layer; a single value applies to every layer.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Floor percentile in [0, 1].
    #[arg(long, default_value_t = 0.05)]
    pub rho: f64,
    /// Rarity threshold; conflicts with --tune-bundle.
    #[arg(long, conflicts_with = "tune_bundle")]
    pub epsilon: Option<f64>,
    /// Held-out inliers used to choose epsilon.
    #[arg(long)]
    pub tune_bundle: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub max_flag_rate: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub reg: f64,
    #[arg(long, default_value_t = 10)]
    pub init_restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct OodScoreArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub bundle: PathBuf,
    /// Override the index's epsilon.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct OodEvalArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub inliers: PathBuf,
    #[arg(long)]
    pub outliers: PathBuf,
    /// Include ROC points in the report.
    #[arg(long)]
    pub roc: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, value_delimiter = ',', default_value = "16,8,4")]
    pub dims: Vec<usize>,
    /// Blobs per layer; defaults to one per class. A single value applies to every layer.
    #[arg(long, value_delimiter = ',')]
    pub blobs: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_within: f64,
    #[arg(long, default_value_t = 10.0)]
    pub sigma_between: f64,
    /// off, randomized, or correlated:<p>
    #[arg(long, default_value = "off")]
    pub cue: String,
    #[arg(long)]
    pub intermediate_signal: bool,
    #[arg(long, value_enum, default_value_t = RuleChoice::FinalBlob)]
    pub prediction_rule: RuleChoice,
    /// Offset added to every coordinate; one value or one per layer.
    #[arg(long, value_delimiter = ',')]
    pub shift: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed for blob centers; defaults to --seed.
    #[arg(long)]
    pub center_seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleChoice {
    FinalBlob,
    PathFunction,
}

#[derive(Debug, Args, Serialize)]
pub struct PerturbArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, value_enum, default_value_t = LabelChoice::Labels)]
    pub label_source: LabelChoice,
    /// Include node and edge totals for a Sankey diagram.
    #[arg(long)]
    pub sankey: bool,
    /// Include paths that differ only at this layer.
    #[arg(long)]
    pub divergence_layer: Option<usize>,
    #[arg(long)]
    pub table_csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
