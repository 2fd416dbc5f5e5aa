use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use propfit::estimation::SfStatistic;
use propfit::models::{LosModelKind, ModelFamily};

#[derive(Debug, Parser)]
#[command(
    name = "propfit",
    version,
    about = "Fit and evaluate large-scale path loss, LOS probability and shadow-fading models"
)]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a measurement CSV and report rejected rows.
    Validate(ValidateArgs),
    /// Fit path loss models per LOS/NLOS partition.
    FitPathloss(FitPathlossArgs),
    /// Fit LOS probability models to the smoothed empirical curve.
    FitLosprob(FitLosprobArgs),
    /// Shadow-fading magnitude versus distance.
    Shadow(ShadowArgs),
    /// Evaluate a model at given frequencies and distances; CSV on stdout.
    Eval(EvalArgs),
    /// Generate a synthetic dataset from a JSON spec.
    Synth(SynthArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::FitPathloss(_) => "fit-pathloss",
            Command::FitLosprob(_) => "fit-losprob",
            Command::Shadow(_) => "shadow",
            Command::Eval(_) => "eval",
            Command::Synth(_) => "synth",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Also write validation.json and run_manifest.json here.
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitPathlossArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "ci,abg,fi,ci-dual,fi-dual"
    )]
    pub models: Vec<ModelFamily>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitLosprobArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "uma3gpp,d1d2,nyu,invexp")]
    pub los_models: Vec<LosModelKind>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ShadowArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "ci,abg,fi,ci-dual,fi-dual"
    )]
    pub models: Vec<ModelFamily>,
    /// Distance bin width, meters.
    #[arg(long, default_value_t = 1.0)]
    pub bin_width: f64,
    /// Per-bin statistic: mean (of |residual|) or rms.
    #[arg(long, default_value = "mean")]
    pub sf_stat: SfStatistic,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// ci, abg, fi, ci-dual, fi-dual, fspl, sf-line, uma3gpp, d1d2, nyu or invexp.
    #[arg(long)]
    pub model: String,
    /// Parameters as name=value pairs, e.g. "n=3" or "alpha=3.5,beta=13.8,gamma=2.5".
    #[arg(long, default_value = "")]
    pub params: String,
    /// Frequencies, GHz.
    #[arg(long, value_delimiter = ',')]
    pub freqs: Vec<f64>,
    /// Distances, meters.
    #[arg(long, value_delimiter = ',')]
    pub distances: Vec<f64>,
    /// Also write eval.csv and run_manifest.json here.
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// JSON synthesis spec.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Overrides the seed in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
}
