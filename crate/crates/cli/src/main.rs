//! `paddy`: command-line front end for rice practice classification.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod cmd;
mod dates;
mod inputs;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paddy_core::learn::{ModelKind, Task};

/// A problem with how the tool was invoked or configured.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "paddy", version, about = "Rice sowing and irrigation practice classification from radar time series")]
#[command(after_help = FILE_FORMATS)]
pub struct Cli {
    /// Log more (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Worker threads for batch prediction and parallel stages.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    workers: u16,

    #[command(subcommand)]
    command: Command,
}

const FILE_FORMATS: &str = "\
File formats:
  series CSV      plot_id,district,area_m2,band,day,value_db (band VV or VH, day = days since May 1)
  labels CSV      plot_id,label,planting_day (label CONTROL, DSR or AWD)
  polygons        GeoJSON FeatureCollection of Polygons with plot_id and district properties
  grids           directory of BAND_day.zgrd rasters (little-endian, ZGRD header)
  features CSV    plot_id,label,window_start,window_end,step followed by the 76 feature columns
  model           JSON ensemble with kind, task, schema version and validation score
  predictions CSV plot_id,district,area_m2,predicted_class,score
  districts CSV   district,n_plots,n_positive,positive_area_m2,positive_acres
  records CSV     district,acres
Dates are YYYY-MM-DD (converted to days since May 1) or bare day offsets.
Every output is accompanied by a manifest.json / <file>.manifest.json with input and output digests.";

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labelled synthetic scene.
    Synth(SynthArgs),
    /// Extract the feature matrix from a series CSV or from grids and polygons.
    Features(FeaturesArgs),
    /// Search hyperparameters and train one model.
    Train(TrainArgs),
    /// Score a model on a labelled feature matrix.
    Evaluate(EvaluateArgs),
    /// Train and score every task over a list of temporal windows.
    Ablate(AblateArgs),
    /// Batch-predict plots with one or more models.
    Predict(PredictArgs),
    /// Sum predictions per district.
    Aggregate(AggregateArgs),
    /// Compare district totals against recorded acreage.
    Compare(CompareArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum TaskArg {
    Combined,
    Sowing,
    Irrigation,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Combined => Task::Combined,
            TaskArg::Sowing => Task::Sowing,
            TaskArg::Irrigation => Task::Irrigation,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum KindArg {
    Rf,
    Gb,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Rf => ModelKind::Rf,
            KindArg::Gb => ModelKind::Gb,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Preset {
    /// The twelve seasonal windows from May 1 to Dec 15.
    Table2,
}

/// Temporal window flags shared by several commands.
#[derive(Args, Debug, Clone)]
pub struct WindowArgs {
    /// Window start (YYYY-MM-DD or day offset). Defaults to May 1.
    #[arg(long)]
    start: Option<String>,
    /// Window end (YYYY-MM-DD or day offset). Defaults to Dec 15.
    #[arg(long)]
    end: Option<String>,
    /// Resampling step in days: 4, 7 or 10.
    #[arg(long)]
    step: Option<i32>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// TOML scene configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Give every plot the same planting day, removing planting-date lag.
    #[arg(long)]
    align_planting: bool,
    /// Acquisition revisit period in days, overriding the config.
    #[arg(long)]
    revisit_days: Option<i32>,
    /// Fixed AWD wet-dry cycle length in days.
    #[arg(long)]
    awd_cycle_days: Option<f64>,
    /// Plots per class, overriding the configured counts.
    #[arg(long)]
    plots_per_class: Option<usize>,
    /// Also render per-acquisition rasters and write them under grids/.
    #[arg(long)]
    grids: bool,
    /// Raster pixel size in metres.
    #[arg(long, default_value_t = 10.0)]
    pixel_size: f64,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    /// Series CSV to ingest.
    #[arg(long, conflicts_with_all = ["grids", "polygons"], required_unless_present = "grids")]
    series: Option<PathBuf>,
    /// Directory of BAND_day.zgrd rasters (requires --polygons).
    #[arg(long, requires = "polygons")]
    grids: Option<PathBuf>,
    /// GeoJSON plot polygons.
    #[arg(long, requires = "grids")]
    polygons: Option<PathBuf>,
    /// Inward buffer in pixels applied to every polygon.
    #[arg(long, default_value_t = paddy_core::zonal::DEFAULT_BUFFER_PX)]
    buffer_px: usize,
    /// Skip the plot size filter on polygons.
    #[arg(long)]
    no_size_filter: bool,
    /// Optional labels CSV joined by plot_id.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    /// Output features CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Labelled features CSV.
    #[arg(long)]
    features: PathBuf,
    #[arg(long, value_enum)]
    task: TaskArg,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Number of sampled hyperparameter configurations.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    budget: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Hold out this stratified fraction before training (0 trains on everything).
    #[arg(long, default_value_t = 0.0)]
    holdout: f64,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Labelled features CSV.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Evaluate only on the held-out part of this stratified split (same as train --holdout).
    #[arg(long, default_value_t = 0.0)]
    holdout: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Proportional-guess trials for the baseline spread.
    #[arg(long, default_value_t = 1000)]
    baseline_trials: usize,
    /// Output JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Built-in window list; without it a single window is taken from --start/--end.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[command(flatten)]
    window: WindowArgs,
    /// Tasks to score (repeatable); all three by default.
    #[arg(long, value_enum)]
    task: Vec<TaskArg>,
    /// Model kinds to search (repeatable); rf and gb by default.
    #[arg(long, value_enum)]
    kind: Vec<KindArg>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    budget: u32,
    #[arg(long, default_value_t = 0.1)]
    test_frac: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output grid CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    series: PathBuf,
    /// Model file (repeatable); the ensemble votes by mode.
    #[arg(long, required = true)]
    model: Vec<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    /// Output predictions CSV.
    #[arg(long)]
    out: PathBuf,
    /// Error ledger CSV; defaults to <out>.errors.csv.
    #[arg(long)]
    errors: Option<PathBuf>,
    /// Also write the district summary here.
    #[arg(long)]
    districts: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AggregateArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// Task the predictions belong to; its positive class is counted.
    #[arg(long, value_enum, default_value = "sowing")]
    task: TaskArg,
    /// Output districts CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Districts CSV from aggregate or predict.
    #[arg(long)]
    districts: PathBuf,
    /// Recorded acreage CSV.
    #[arg(long)]
    records: PathBuf,
    /// RBO persistence.
    #[arg(long, default_value_t = 0.95)]
    p: f64,
    /// Output directory for report.json, paired.csv and scatter.dat.
    #[arg(long)]
    out_dir: PathBuf,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use paddy_core::Error as E;
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Config(_) | E::Input(_) | E::Window(_) | E::Schema { .. } | E::Csv(_) | E::Json(_) | E::Geometry(_) => 2,
                E::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
                _ => 1,
            };
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == std::io::ErrorKind::NotFound {
                return 2;
            }
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers as usize).build_global() {
        log::warn!("thread pool already initialised: {e}");
    }
    let workers = cli.workers as usize;
    let result = match cli.command {
        Command::Synth(a) => cmd::synth::run(a),
        Command::Features(a) => cmd::features::run(a),
        Command::Train(a) => cmd::train::run(a),
        Command::Evaluate(a) => cmd::evaluate::run(a),
        Command::Ablate(a) => cmd::ablate::run(a),
        Command::Predict(a) => cmd::predict::run(a, workers),
        Command::Aggregate(a) => cmd::aggregate::run(a),
        Command::Compare(a) => cmd::compare::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
