use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "hodgeloc",
    version,
    about = "Degenerating variations of Hodge structure: filtrations, limits and loci"
)]
pub struct Cli {
    /// Seed for randomized choices (cone coefficient sampling).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Float tolerance for inexact comparisons.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Evaluate independent work items on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn echo(&self) -> Value {
        serde_json::to_value(self).expect("arguments serialize")
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Weight filtration of a nilpotent matrix or of the cone of the N_j.
    Wf(WfArgs),
    /// Whether the limit (W(N)[-w], F) is a mixed Hodge structure.
    MhsCheck(InputArgs),
    /// Deligne bigrading of the limiting mixed Hodge structure.
    Bigrading(InputArgs),
    /// Purity and polarization of the orbit at sample points.
    OrbitCheck(OrbitCheckArgs),
    /// The limiting mixed Hodge structure and its polarization checks.
    LimitingMhs(InputArgs),
    /// Locus equations of an integral class.
    Locus(LocusArgs),
    /// Integral (0,0) classes of bounded norm at a point.
    Enumerate(EnumerateArgs),
    /// Nearest point of the orbit locus of a class.
    Project(ProjectArgs),
    /// Finiteness of Hodge classes of bounded norm along a ray.
    Verify25(Verify25Args),
    /// Decay and norm asymptotics along a ray.
    Asymptotics(AsymptoticsArgs),
    /// Emit the fixture documents.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Variation document (JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Named fixture instead of a document.
    #[arg(long, conflicts_with = "input")]
    pub fixture: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct WfArgs {
    #[command(flatten)]
    pub source: InputArgs,

    /// A square matrix as JSON, e.g. '[["0","0"],["1","0"]]'.
    #[arg(long, conflicts_with_all = ["input", "fixture"])]
    pub matrix: Option<String>,

    /// Use the whole cone spanned by the generators.
    #[arg(long)]
    pub cone: bool,

    /// Which generator to use without --cone.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct OrbitCheckArgs {
    #[command(flatten)]
    pub source: InputArgs,

    /// Samples with min Im z_j below this are skipped.
    #[arg(long, default_value_t = 1.0)]
    pub y_threshold: f64,

    /// Sample point, comma separated Gaussian rationals; repeatable.
    /// Defaults to z_j = i n for n = 1, 2, 4, 8.
    #[arg(long = "at", allow_hyphen_values = true)]
    pub points: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct LocusArgs {
    #[command(flatten)]
    pub source: InputArgs,

    /// Integral class, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub class: String,

    /// Solve the orbit locus exactly and verify it.
    #[arg(long)]
    pub solve: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub source: InputArgs,

    /// Point z, comma separated Gaussian rationals.
    #[arg(long, allow_hyphen_values = true)]
    pub at: String,

    /// Exact values of s_j for documents with a series.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,

    /// Bound on Q(v, v).
    #[arg(long = "K", alias = "k")]
    pub k: i64,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub source: InputArgs,

    #[arg(long, allow_hyphen_values = true)]
    pub class: String,

    #[arg(long, allow_hyphen_values = true)]
    pub at: String,
}

#[derive(Debug, Args, Serialize)]
pub struct Verify25Args {
    #[command(flatten)]
    pub source: InputArgs,

    /// Base point of the ray; defaults to 0.
    #[arg(long, allow_hyphen_values = true)]
    pub ray: Option<String>,

    /// Positive rational direction; defaults to 1 in every coordinate.
    #[arg(long)]
    pub direction: Option<String>,

    /// Depths n of the points ray + i n direction: "a..=b" or a list.
    #[arg(long, default_value = "1..=8")]
    pub depths: String,

    #[arg(long = "K", alias = "k", default_value_t = 9)]
    pub k: i64,

    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Depth by which the hit set must be stable; defaults to the deepest.
    #[arg(long)]
    pub stable_by: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoticsMode {
    /// Distance between the variation and its nilpotent orbit.
    Decay,
    /// Hodge norms against the graded model norm.
    Norm,
    /// Hodge norm of one vector against its leading graded piece.
    Graded,
}

#[derive(Debug, Args, Serialize)]
pub struct AsymptoticsArgs {
    #[command(flatten)]
    pub source: InputArgs,

    #[arg(long, value_enum, default_value_t = AsymptoticsMode::Decay)]
    pub mode: AsymptoticsMode,

    /// Base point of the ray (decay), comma separated Gaussian rationals.
    #[arg(long, allow_hyphen_values = true)]
    pub ray: Option<String>,

    /// Real parts x0 (norm, graded), comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,

    /// Positive direction (decay), comma separated.
    #[arg(long)]
    pub direction: Option<String>,

    /// Grid of t values, comma separated.
    #[arg(long)]
    pub grid: Option<String>,

    /// Vector for the graded mode, comma separated rationals.
    #[arg(long, allow_hyphen_values = true)]
    pub vector: Option<String>,

    /// Relative tolerance of the fitted decay exponent.
    #[arg(long, default_value_t = 0.10)]
    pub fit_tol: f64,

    /// Largest relative change of a band constant between tau = 16 and 256.
    #[arg(long, default_value_t = 0.05)]
    pub band_tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct FixturesArgs {
    /// Emit one fixture only.
    #[arg(long)]
    pub name: Option<String>,

    /// Write one <name>.json per fixture into this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
