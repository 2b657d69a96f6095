//! Command-line surface. Every verb's arguments double as the serialized
//! config embedded in its output files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ksvd::RankMode;
use serde::{Deserialize, Serialize};

/// Version of the embedded config layout.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "ksvd-bench", version, about = "Seeded partial-SVD benchmarks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Timed repetitions per measurement (a warm-up run is discarded).
    #[arg(long, global = true, default_value_t = 5)]
    pub repeats: usize,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Defaults to csv for tables and json for single reports.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Largest matrix (rows * cols) any command may generate or load.
    #[arg(long, global = true, default_value_t = 100_000_000)]
    pub max_elems: u64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write a synthetic matrix (KLRM, or CSV for a .csv path).
    Gen(GenArgs),
    /// Numerical rank from the bidiagonal factor.
    Rank(RankArgs),
    /// Partial SVD of one matrix.
    Svd(SvdArgs),
    /// Time and error table across sizes and methods.
    Compare(CompareArgs),
    /// Per-index singular-triplet agreement with the dense SVD.
    Triplets(TripletsArgs),
    /// Riemannian SGD similarity learning on a synthetic task.
    Rsl(RslArgs),
    /// Re-run the config embedded in an earlier output file.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Krylov SVD, top `r` triplets.
    Fsvd,
    /// Krylov SVD, every triplet the bidiagonalization captured.
    FsvdFull,
    /// Randomized SVD with oversampling 10.
    RsvdDefault,
    /// Randomized SVD with large oversampling (`--oversampling`).
    RsvdOversampled,
    /// Full dense SVD.
    Dense,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fsvd => "fsvd",
            Method::FsvdFull => "fsvd-full",
            Method::RsvdDefault => "rsvd-default",
            Method::RsvdOversampled => "rsvd-oversampled",
            Method::Dense => "dense",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            Method::Fsvd | Method::FsvdFull => 11,
            Method::RsvdDefault => 12,
            Method::RsvdOversampled => 13,
            Method::Dense => 14,
        }
    }
}

/// `ROWSxCOLS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Size {
    pub rows: usize,
    pub cols: usize,
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("size '{s}' must look like 1000x500"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad dimension '{t}' in size '{s}'"))
        };
        let size = Size {
            rows: parse(r)?,
            cols: parse(c)?,
        };
        if size.rows == 0 || size.cols == 0 {
            return Err(format!("size '{s}' has a zero dimension"));
        }
        Ok(size)
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl TryFrom<String> for Size {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Size> for String {
    fn from(s: Size) -> String {
        s.to_string()
    }
}

/// Either a matrix file or a synthetic generator.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MatrixSource {
    /// KLRM or CSV matrix file; overrides the synthetic size.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "1000x1000")]
    pub size: Size,
    /// Rank of the synthetic matrix; 0 for a dense Gaussian.
    #[arg(long, default_value_t = 0)]
    pub rank_true: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[arg(long, default_value = "1000x1000")]
    pub size: Size,
    /// 0 for a dense Gaussian.
    #[arg(long, default_value_t = 0)]
    pub rank_true: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RankArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    /// One or more thresholds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1e-8")]
    pub eps: Vec<f64>,
    #[arg(long, default_value = "absolute", value_parser = parse_mode)]
    pub mode: RankMode,
    /// Also time rank counting with the dense SVD (when it fits).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub oracle: bool,
}

fn parse_mode(s: &str) -> Result<RankMode, String> {
    s.parse().map_err(|e: ksvd::Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SvdArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[arg(long, value_enum, default_value = "fsvd")]
    pub method: Method,
    /// Number of triplets to extract.
    #[arg(long, default_value_t = 20)]
    pub r: usize,
    /// Bidiagonalization steps; defaults to min(rows, cols).
    #[arg(long)]
    pub k: Option<usize>,
    /// Oversampling of the rsvd-oversampled method.
    #[arg(long, default_value_t = 100)]
    pub oversampling: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000x1000")]
    pub sizes: Vec<Size>,
    /// Rank of the synthetic matrices; 0 for dense Gaussians.
    #[arg(long, default_value_t = 100)]
    pub rank_true: usize,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "fsvd,fsvd-full,rsvd-default,rsvd-oversampled,dense"
    )]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 20)]
    pub r: usize,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub oversampling: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TripletsArgs {
    #[arg(long, default_value = "200x200")]
    pub size: Size,
    #[arg(long, default_value_t = 100)]
    pub rank_true: usize,
    #[arg(long, default_value_t = 50)]
    pub r: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "fsvd,rsvd-default")]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub oversampling: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RslArgs {
    #[arg(long, default_value_t = 64)]
    pub d1: usize,
    #[arg(long, default_value_t = 32)]
    pub d2: usize,
    /// Rank of the learned matrix.
    #[arg(long, default_value_t = 5)]
    pub rank: usize,
    /// Rank of the ground-truth similarity.
    #[arg(long, default_value_t = 5)]
    pub rank_true: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_train: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_test: usize,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Retraction backends: `dense`, `fsvd:<k>` or `fsvd:<c>r` (c times the rank).
    #[arg(long, value_delimiter = ',', default_value = "fsvd:4r,dense")]
    pub backends: Vec<String>,
    /// Test accuracy is recorded every this many steps (0: only at the end).
    #[arg(long, default_value_t = 100)]
    pub eval_every: usize,
    #[arg(long, default_value_t = ksvd::rsl::DEFAULT_MARGIN_FLOOR)]
    pub margin_floor: f64,
    /// Build the tangent projector from the gradient's own SVD.
    #[arg(long)]
    pub gradient_projector: bool,
    /// Paired training data (`x_*, v_*, y` columns) instead of the synthetic task.
    #[arg(long, requires = "test_csv")]
    pub train_csv: Option<PathBuf>,
    #[arg(long, requires = "train_csv")]
    pub test_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// A file written by an earlier run (or its `.config.json` sidecar).
    pub file: PathBuf,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub config_version: u32,
    pub seed: u64,
    pub repeats: usize,
    pub format: Format,
    pub max_elems: u64,
    pub command: CommandConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "lowercase")]
pub enum CommandConfig {
    Gen(GenArgs),
    Rank(RankArgs),
    Svd(SvdArgs),
    Compare(CompareArgs),
    Triplets(TripletsArgs),
    Rsl(RslArgs),
}

impl CommandConfig {
    pub fn default_format(&self) -> Format {
        match self {
            CommandConfig::Rank(_) | CommandConfig::Svd(_) | CommandConfig::Gen(_) => Format::Json,
            _ => Format::Csv,
        }
    }
}
