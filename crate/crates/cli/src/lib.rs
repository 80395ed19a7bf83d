//! Command-line surface: `fit` a model to a CSV, `predict` from a saved fit
//! document, and `simulate` a Monte Carlo study.

pub mod config;
pub mod document;
pub mod error;
pub mod input;
pub mod predict;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpm_core::{build_anchor_set, fit, validate_dataset, Link, ModelFit};
use cpm_sim::{run_study, study::thread_count, Estimator, Family, ScenarioSpec, StudyReport};
use serde::Serialize;

pub use config::RunConfig;
pub use document::FitDocument;
pub use error::{CliError, Result};

/// Link used by `fit` when neither the flag nor the config names one.
pub const DEFAULT_LINK: Link = Link::Logit;

#[derive(Debug, Parser)]
#[command(
    name = "cpm",
    version,
    about = "Cumulative probability models for outcomes with detection limits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a CSV and write a JSON fit document.
    Fit(FitArgs),
    /// Conditional CDFs and quantiles from a fit document.
    Predict(PredictArgs),
    /// Run a simulation study and write metrics tables.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV: outcome, censor code, covariates.
    #[arg(long)]
    pub data: PathBuf,
    /// logit, probit, loglog or cloglog.
    #[arg(long)]
    pub link: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Fit document written by `cpm fit`.
    #[arg(long)]
    pub fit: PathBuf,
    /// `name=value` or `name=start:stop:step`, comma separated; repeatable.
    #[arg(long)]
    pub profile: Vec<String>,
    #[arg(long = "cdf-at", num_args = 1.., allow_negative_numbers = true)]
    pub cdf_at: Vec<f64>,
    #[arg(long, num_args = 1..)]
    pub quantile: Vec<f64>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// single, multi or misspec.
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value_t = 1)]
    pub scenario: u8,
    /// Sample size (per site for the multi family).
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 20240601)]
    pub seed: u64,
    /// Comma-separated subset of cpm, impute_dl, impute_half, impute_sqrt2, mle.
    #[arg(long, default_value = "cpm")]
    pub estimators: String,
    /// Link used for the CPM fits.
    #[arg(long, default_value = "probit")]
    pub link: String,
    /// Output directory for metrics.csv, metrics.json and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::File::create(path).map_err(|e| CliError::io(path, e))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io("<json>", e))?;
    writeln!(w, "{text}").map_err(|e| CliError::io(out.unwrap_or(Path::new("<stdout>")), e))?;
    w.flush()
        .map_err(|e| CliError::io(out.unwrap_or(Path::new("<stdout>")), e))
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), |p| RunConfig::load(p))
}

/// Reads, fits and summarizes; returns the model and its document.
pub fn fit_csv(data: &Path, link: Link, cfg: &RunConfig) -> Result<(ModelFit, FitDocument)> {
    let mut table = input::read_csv(data, &cfg.columns)?;
    if let Some(d) = cfg.round_digits {
        input::round_outcomes(&mut table.observations, d);
    }
    let ds = validate_dataset(&table.observations)?.with_covariate_names(table.covariates)?;
    let anchors = build_anchor_set(&ds)?;
    let model = fit(&ds, &anchors, link, &cfg.fit)?;
    let doc = FitDocument::new(&model, &anchors, cfg.level)?;
    Ok((model, doc))
}

pub fn load_fit(path: &Path) -> Result<ModelFit> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: FitDocument = serde_json::from_str(&text).map_err(|e| CliError::Document(e.to_string()))?;
    doc.to_fit()
}

fn run_fit(args: &FitArgs) -> Result<()> {
    let cfg = load_config(args.config.as_ref())?;
    let link = match &args.link {
        Some(l) => config::parse_link(l)?,
        None => cfg.link_or(DEFAULT_LINK)?,
    };
    let (_, doc) = fit_csv(&args.data, link, &cfg)?;
    write_json(args.out.as_deref().or(cfg.output.as_deref()), &doc)
}

fn run_predict(args: &PredictArgs) -> Result<()> {
    let cfg = load_config(args.config.as_ref())?;
    let model = load_fit(&args.fit)?;
    let pick = |flag: &Vec<f64>, file: &Vec<f64>| if flag.is_empty() { file.clone() } else { flag.clone() };
    let quantiles = pick(&args.quantile, &cfg.quantiles);
    let cdf_at = pick(&args.cdf_at, &cfg.cdf_at);
    let level = args.level.unwrap_or(cfg.level);
    let specs = if args.profile.is_empty() {
        &cfg.profiles
    } else {
        &args.profile
    };
    let profiles = predict::expand_profiles(specs, &model.covariate_names)?;
    let pred = predict::predict(&model, &profiles, &cdf_at, &quantiles, level)?;
    let out = args.out.as_deref().or(cfg.output.as_deref());
    match args.format {
        Format::Json => write_json(out, &pred),
        Format::Csv => predict::write_predictions_csv(sink(out)?, &pred),
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub spec: &'a ScenarioSpec,
    pub estimators: &'a [Estimator],
    pub threads: usize,
    pub exclusions: &'a [cpm_sim::Exclusion],
    pub targets: &'a [cpm_sim::Target],
}

pub fn write_study(dir: &Path, report: &StudyReport, threads: usize) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let csv_path = dir.join("metrics.csv");
    let mut w = csv::Writer::from_writer(create(&csv_path)?);
    for row in &report.rows {
        w.serialize(row).map_err(|e| CliError::io(&csv_path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    write_json(Some(&dir.join("metrics.json")), &report.rows)?;
    let manifest = Manifest {
        schema_version: document::SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: report.spec.seed,
        spec: &report.spec,
        estimators: &report.estimators,
        threads,
        exclusions: &report.exclusions,
        targets: &report.targets,
    };
    write_json(Some(&dir.join("manifest.json")), &manifest)
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let family = Family::parse(&args.family, args.scenario)?;
    let link = config::parse_link(&args.link)?;
    let estimators = Estimator::parse_list(&args.estimators)?;
    let spec = ScenarioSpec::new(family, args.n, args.reps, args.seed).with_link(link);
    let report = run_study(&spec, &estimators)?;
    write_study(&args.out, &report, thread_count())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => run_fit(a),
        Command::Predict(a) => run_predict(a),
        Command::Simulate(a) => run_simulate(a),
    }
}
