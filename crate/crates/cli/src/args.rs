use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "itpq",
    version,
    about = "Contextuality and infinite-tensor-product numerics"
)]
pub struct Cli {
    /// Directory receiving the output files and manifest.json.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

/// Everything needed to recompute a run; recorded verbatim in the manifest.
#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Exhaustive Kochen-Specker colorability check.
    KsCheck(KsCheckArgs),
    /// Frame-function check of a probability assignment over random contexts.
    GleasonTest(GleasonArgs),
    /// Sector verdict and orthogonalization curve for two product states.
    Sector(PairArgs),
    /// Truncated overlaps of two product states.
    Overlap(PairArgs),
    /// Matrix elements of an operator between sector representatives.
    OperatorBlock(OperatorBlockArgs),
    /// Coherence decay and outcome sampling for a measurement cascade.
    Cascade(CascadeArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Cabello18,
    Control,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct KsCheckArgs {
    /// Instance file: {"dim", "vectors", "contexts"}.
    #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentKind {
    /// |⟨ψ|r⟩|² for the given or a seeded random state.
    Born,
    /// 1/dim on every ray.
    Uniform,
    /// 1 on every ray; never a frame function.
    Ones,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GleasonArgs {
    /// State vector file: [[re, im], ...]. Drawn from the seed if absent.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Hilbert-space dimension; inferred from --state when given.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub contexts: usize,
    #[arg(long, value_enum, default_value_t = AssignmentKind::Born)]
    pub assignment: AssignmentKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PairArgs {
    pub state_a: PathBuf,
    pub state_b: PathBuf,
    /// Truncations: comma-separated values or start:end:step ranges.
    #[arg(long, default_value = "1:64:1")]
    pub n_list: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OperatorBlockArgs {
    pub expr: PathBuf,
    /// Representative product-state files.
    #[arg(required = true)]
    pub reps: Vec<PathBuf>,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CascadeArgs {
    pub config: PathBuf,
    /// Last depth of the coherence curve; defaults to the config's max_depth.
    #[arg(long)]
    pub depths: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
