use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Fiber weave delay and skew analysis.
#[derive(Debug, Parser)]
#[command(name = "fwe", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List fabric styles and their bundle dimensions.
    Catalog(CatalogArgs),
    /// Sweep trace offset and write delay or skew profiles.
    Sweep(SweepArgs),
    /// Build exceedance statistics from sweep profiles.
    Stats(StatsArgs),
    /// Compare exceedance across styles at integer thresholds.
    Compare(CompareArgs),
    /// Run the solver validation suite.
    Validate(ValidateArgs),
    /// Dump the permittivity raster of one cross-section.
    Raster(RasterArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayerOrderArg {
    WarpOnTop,
    FillOnTop,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML fabric catalog; the built-in styles are used when omitted.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Comma-separated style names, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub styles: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "fwe-out")]
    pub out: PathBuf,
    /// Cache directory [default: $FWE_CACHE_DIR, else <out>/.cache].
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write JSON output.
    #[arg(long)]
    pub json: bool,
    /// Also write CSV output.
    #[arg(long)]
    pub csv: bool,
    /// Also write SVG figures.
    #[arg(long)]
    pub svg: bool,
    /// Which bundle layer lies nearer the trace.
    #[arg(long, value_enum, default_value = "warp-on-top")]
    pub layer_order: LayerOrderArg,
    /// Run without worker threads.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LayoutArgs {
    /// Single-ended trace (default).
    #[arg(long, conflicts_with = "diff")]
    pub single: bool,
    /// Differential pair.
    #[arg(long)]
    pub diff: bool,
    /// Trace width, mil.
    #[arg(short = 'w', long = "width", default_value_t = 4.0)]
    pub w: f64,
    /// Edge-to-edge pair separation, mil.
    #[arg(short = 's', long = "separation", default_value_t = 4.0)]
    pub s: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepOpts {
    /// Offsets as `min:max:step`, mil.
    #[arg(long, default_value = "-12:12:1", allow_hyphen_values = true)]
    pub offsets: String,
    /// Longitudinal slabs per lattice period.
    #[arg(long, default_value_t = 8)]
    pub slices: usize,
    /// Grid spacing, mil.
    #[arg(long, default_value_t = 0.25)]
    pub grid: f64,
    /// Relative residual tolerance of the linear solver.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap of the linear solver.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct StatsOpts {
    /// Monte Carlo sample size.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Histogram bins.
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Threshold grid as `min:max:step`, ps/inch [default: 0 to ceil(dt) step 0.25].
    #[arg(long)]
    pub thresholds: Option<String>,
    /// Also fit the two-parameter Kumaraswamy model.
    #[arg(long)]
    pub kumaraswamy: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CatalogArgs {
    #[command(flatten)]
    pub common: Common,
    /// List the four built-in styles.
    #[arg(long)]
    pub builtin: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub layout: LayoutArgs,
    #[command(flatten)]
    pub sweep: SweepOpts,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub layout: LayoutArgs,
    #[command(flatten)]
    pub sweep: SweepOpts,
    #[command(flatten)]
    pub stats: StatsOpts,
    /// Analyze this profile CSV instead of sweep output.
    #[arg(long, requires = "period")]
    pub input: Option<PathBuf>,
    /// Lattice period of `--input`, mil.
    #[arg(long)]
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub layout: LayoutArgs,
    /// Integer thresholds as `min:max:step`, ps/inch.
    #[arg(long, default_value = "1:8:1")]
    pub thresholds: String,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct RasterArgs {
    #[command(flatten)]
    pub common: Common,
    /// Longitudinal slice position, mil.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    /// Trace center, mil.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub offset: f64,
    /// Trace width, mil; also sets the box width.
    #[arg(short = 'w', long = "width", default_value_t = 4.0)]
    pub w: f64,
    /// Leave the trace out.
    #[arg(long)]
    pub no_trace: bool,
    /// Replace glass by resin.
    #[arg(long)]
    pub homogenized: bool,
    /// Grid spacing, mil.
    #[arg(long, default_value_t = 0.25)]
    pub grid: f64,
}
