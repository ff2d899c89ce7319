use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "insilico", version, about = "Probabilistic cause-of-death assignment from verbal autopsy data")]
pub struct Cli {
    /// Log progress at info level (RUST_LOG overrides).
    #[arg(long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the hierarchical model and write CSMF and per-death posteriors.
    Fit(FitArgs),
    /// Run the InterVA propensity baseline.
    Interva(IntervaArgs),
    /// Estimate physician bias matrices and debiased category weights.
    Debias(DebiasArgs),
    /// Score estimates against known causes.
    Evaluate(EvaluateArgs),
    /// Split labeled data into train and test sets.
    Split(SplitArgs),
    /// Simulate labeled data from the generative model.
    Simulate(SimulateArgs),
    /// Build a probbase from labeled training data.
    Rankify(RankifyArgs),
    /// Gelman-Rubin diagnostics for saved draws.
    Diagnose(DiagnoseArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Interva(_) => "interva",
            Command::Debias(_) => "debias",
            Command::Evaluate(_) => "evaluate",
            Command::Split(_) => "split",
            Command::Simulate(_) => "simulate",
            Command::Rankify(_) => "rankify",
            Command::Diagnose(_) => "diagnose",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// File of `key = value` lines; keys are flag names, flags given on the
    /// command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorArg {
    Default,
    Quantile,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub symptoms: PathBuf,
    #[arg(long)]
    pub probbase: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Grade values (`grade,value`); required with `--prior quantile`.
    #[arg(long)]
    pub alphabet: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "default")]
    pub prior: PriorArg,
    /// Pseudo-count scale of the grade priors.
    #[arg(long, default_value_t = 1.0)]
    pub prior_strength: f64,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 20)]
    pub thin: usize,
    #[arg(long, default_value_t = 3)]
    pub chains: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Initial standard deviation of the theta proposals.
    #[arg(long, default_value_t = 0.1)]
    pub jump_sigma: f64,
    /// Keep the jump size fixed during burn-in.
    #[arg(long)]
    pub no_adapt: bool,
    /// Hold mu fixed (requires `--fixed-sigma2`).
    #[arg(long, requires = "fixed_sigma2")]
    pub fixed_mu: Option<f64>,
    /// Hold sigma2 fixed (requires `--fixed-mu`).
    #[arg(long, requires = "fixed_mu")]
    pub fixed_sigma2: Option<f64>,
    /// Physician codes (`death_id,physician_id,category`).
    #[arg(long, requires = "cause_categories")]
    pub physician: Option<PathBuf>,
    /// Cause to category map (`cause_id,category`).
    #[arg(long)]
    pub cause_categories: Option<PathBuf>,
    /// Broad category labels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    #[arg(long, default_value_t = 500)]
    pub em_max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub em_tol: f64,
    /// Causes removed from the probbase before fitting, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub drop_causes: Option<Vec<String>>,
    /// Skip writing draws.csv.
    #[arg(long)]
    pub no_draws: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct IntervaArgs {
    #[arg(long)]
    pub symptoms: PathBuf,
    #[arg(long)]
    pub probbase: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Grade values used in place of the defaults.
    #[arg(long)]
    pub alphabet: Option<PathBuf>,
    /// Prior cause fractions (`cause,value`); uniform when absent.
    #[arg(long)]
    pub prior_csmf: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub drop_causes: Option<Vec<String>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct DebiasArgs {
    #[arg(long)]
    pub symptoms: PathBuf,
    #[arg(long)]
    pub physician: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    #[arg(long, default_value_t = 500)]
    pub em_max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub em_tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Per-death cause probabilities (`id,<cause...>`).
    #[arg(long)]
    pub individual: PathBuf,
    /// True causes (`id,cause`).
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Estimated CSMF; defaults to the mean of the per-death rows.
    #[arg(long)]
    pub csmf: Option<PathBuf>,
    /// True CSMF; defaults to the label frequencies.
    #[arg(long)]
    pub truth_csmf: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub top_k: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long)]
    pub symptoms: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Resample the test set toward a Dirichlet-drawn CSMF.
    #[arg(long)]
    pub dirichlet: bool,
    #[arg(long, default_value_t = 1.0)]
    pub concentration: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Generating probbase; a random one is drawn when absent.
    #[arg(long)]
    pub probbase: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub n_symptoms: usize,
    #[arg(long, default_value_t = 5)]
    pub n_causes: usize,
    #[arg(long)]
    pub alphabet: Option<PathBuf>,
    /// Cause fractions, comma separated; uniform when absent.
    #[arg(long, value_delimiter = ',', conflicts_with = "csmf")]
    pub pi: Option<Vec<f64>>,
    /// Cause fractions as a `cause,value` file.
    #[arg(long)]
    pub csmf: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub missing_rate: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct RankifyArgs {
    #[arg(long)]
    pub symptoms: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "default")]
    pub mode: PriorArg,
    /// Probbase whose grade shares the quantile mode reproduces.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub draws: PathBuf,
    /// Directory for psrf.csv and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}
