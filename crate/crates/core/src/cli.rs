//! Command-line front end.
//!
//! Precedence for settings: built-in defaults, then the config file, then
//! `DEEPGB_*` environment variables, then command-line flags.
//!
//! Exit codes: 0 on success, 1 when a command fails at run time, 2 for usage,
//! configuration and path errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::boosting::{deepgb_fit, deepgb_predict, DeepGbModel, StopReason};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{backtest, render_table, EvalReport};
use crate::format::{load_model, save_model, write_atomic};
use crate::series::{extract_calendar_features, load_csv, TimeSeries};

pub const MODEL_FILE: &str = "model.deepgb";
pub const STAGE_LOG_FILE: &str = "stages.csv";
pub const EFFECTIVE_CONFIG_FILE: &str = "effective.conf";
pub const REPORT_CSV_FILE: &str = "report.csv";
pub const REPORT_TABLE_FILE: &str = "report.txt";
pub const FORECAST_FILE: &str = "forecast.csv";
pub const DECOMPOSITION_FILE: &str = "decomposition.csv";

#[derive(Debug, Parser)]
#[command(
    name = "deepgb",
    version,
    about = "Boosted calendar embeddings with a residual tree ensemble"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on one series and write it with a stage log.
    Fit(FitArgs),
    /// Extend a series by `horizon` steps with a fitted model.
    Forecast(ForecastArgs),
    /// Backtest DeepGB and the baselines on every series in the data file.
    Benchmark(BenchmarkArgs),
    /// Write per-stage predictions and the residual for plotting.
    ExportPlot(ExportPlotArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Config file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV; overrides `data`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Model file to write [default: <out>/model.deepgb].
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Fitted model [default: <out_dir>/model.deepgb].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Steps to forecast; overrides `horizon`.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Forecast CSV [default: <out_dir>/forecast.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExportPlotArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Fitted model [default: <out_dir>/model.deepgb].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Decomposition CSV [default: <out_dir>/decomposition.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Builds the effective config for a command.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::parse_with_env("", |k| std::env::var(k).ok())?,
    };
    if let Some(data) = &common.data {
        cfg.data.clone_from(data);
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// The series named by `cfg.series`, or the first one in the file.
pub fn load_series(cfg: &RunConfig) -> Result<TimeSeries> {
    let all = load_csv(&cfg.data, cfg.layout, cfg.missing_policy)?;
    match &cfg.series {
        None => Ok(all
            .into_iter()
            .next()
            .expect("loader returns at least one series")),
        Some(name) => all.into_iter().find(|s| s.name() == name).ok_or_else(|| {
            Error::Config(format!(
                "series '{name}' not found in {}",
                cfg.data.display()
            ))
        }),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

/// Per-stage summary: delta, residual size, last epoch loss and whether
/// the loop stopped early after that stage.
pub fn stage_log(model: &DeepGbModel) -> String {
    let early = matches!(
        model.stop,
        StopReason::DeltaBelowEpsilon | StopReason::ResidualBelowEpsilon
    );
    let mut out = String::from("stage,feature,delta,residual_mean_abs,final_loss,early_stop\n");
    for (i, s) in model.stages.iter().enumerate() {
        let last = i + 1 == model.stages.len();
        let loss = s.loss_history.last().copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.stage,
            s.feature,
            s.delta,
            s.residual_mean_abs(),
            loss,
            last && early
        );
    }
    out
}

/// `cfg` with absolute paths, so the file can be reused from any directory.
pub fn effective_config(cfg: &RunConfig) -> Result<String> {
    let mut abs = cfg.clone();
    abs.data = std::path::absolute(&cfg.data).map_err(|e| Error::io(&cfg.data, e))?;
    abs.out_dir = std::path::absolute(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    Ok(abs.to_config_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    pub model_path: PathBuf,
    pub stage_log_path: PathBuf,
    pub config_path: PathBuf,
    pub model: DeepGbModel,
}

/// Fits on the trailing `train_days` window of the selected series (all of
/// it when shorter) and writes the model, the stage log and the effective
/// config into `cfg.out_dir`.
pub fn cmd_fit(cfg: &RunConfig, model_path: Option<&Path>) -> Result<FitOutput> {
    cfg.validate()?;
    let ts = load_series(cfg)?;
    let per_day = (crate::series::SECONDS_PER_DAY / ts.step().max(1)).max(1) as usize;
    let window = cfg.train_days.saturating_mul(per_day).min(ts.len());
    let train = ts.slice(ts.len() - window..ts.len())?;
    let fm = extract_calendar_features(&train, &cfg.features)?;
    let model = deepgb_fit(&train, &fm, &cfg.boost_config(), &cfg.gbdt_config())?;

    create_dir(&cfg.out_dir)?;
    let model_path = model_path.map_or_else(|| cfg.out_dir.join(MODEL_FILE), Path::to_path_buf);
    ensure_parent(&model_path)?;
    save_model(&model_path, &model)?;
    let stage_log_path = cfg.out_dir.join(STAGE_LOG_FILE);
    write_atomic(&stage_log_path, stage_log(&model).as_bytes())?;
    let config_path = cfg.out_dir.join(EFFECTIVE_CONFIG_FILE);
    write_atomic(&config_path, effective_config(cfg)?.as_bytes())?;
    Ok(FitOutput {
        model_path,
        stage_log_path,
        config_path,
        model,
    })
}

/// `timestamp,forecast` rows for the `horizon` steps after the series ends.
pub fn forecast_csv(model: &DeepGbModel, ts: &TimeSeries, horizon: usize) -> Result<String> {
    let future = ts.future_timestamps(horizon);
    let mut out = String::from("timestamp,forecast\n");
    if horizon == 0 {
        return Ok(out);
    }
    let fm = model.features_for(&future)?;
    let values = deepgb_predict(model, &fm)?;
    for (t, v) in future.iter().zip(values) {
        let _ = writeln!(out, "{t},{v}");
    }
    Ok(out)
}

pub fn cmd_forecast(
    cfg: &RunConfig,
    model_path: &Path,
    horizon: usize,
    out: &Path,
) -> Result<String> {
    let model = load_model(model_path)?;
    let ts = load_series(cfg)?;
    let csv = forecast_csv(&model, &ts, horizon)?;
    ensure_parent(out)?;
    write_atomic(out, csv.as_bytes())?;
    Ok(csv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutput {
    pub report: EvalReport,
    pub table: String,
    pub csv_path: PathBuf,
}

/// Backtests DeepGB, seasonal naive and linear AR on every series in the
/// data file and writes `report.csv` and `report.txt`.
pub fn cmd_benchmark(cfg: &RunConfig) -> Result<BenchmarkOutput> {
    cfg.validate()?;
    let mut series = load_csv(&cfg.data, cfg.layout, cfg.missing_policy)?;
    series.sort_by(|a, b| a.name().cmp(b.name()));
    let mut report = EvalReport {
        rows: Vec::new(),
        protocol: cfg.split(),
    };
    for ts in &series {
        let models = cfg.benchmark_models(ts.step());
        let part = backtest(std::slice::from_ref(ts), &models, cfg.split());
        report.rows.extend(part.rows);
    }
    let table = render_table(&report)?;
    create_dir(&cfg.out_dir)?;
    let csv_path = cfg.out_dir.join(REPORT_CSV_FILE);
    write_atomic(&csv_path, report.to_csv().as_bytes())?;
    write_atomic(&cfg.out_dir.join(REPORT_TABLE_FILE), table.as_bytes())?;
    Ok(BenchmarkOutput {
        report,
        table,
        csv_path,
    })
}

/// `timestamp,y,stage_1_pred,..,residual` on the original scale. Stage `i`
/// is the full network after stage `i` (all tables up to it); the residual
/// is `y` minus the last stage's network, before the tree ensemble.
pub fn decomposition_csv(model: &DeepGbModel, ts: &TimeSeries) -> Result<String> {
    if model.stages.is_empty() {
        return Err(Error::Fit("model has no stage records to export".into()));
    }
    let fm = model.features_for(ts.timestamps())?;
    model.check_features(&fm)?;
    let stage_preds = model
        .stages
        .iter()
        .map(|s| Ok(model.scaler.inverse(&s.model.predict(&fm)?)))
        .collect::<Result<Vec<_>>>()?;
    let last = stage_preds.last().expect("checked non-empty");

    let mut out = String::from("timestamp,y");
    for s in &model.stages {
        let _ = write!(out, ",stage_{}_pred", s.stage);
    }
    out.push_str(",residual\n");
    for (i, (t, y)) in ts.timestamps().iter().zip(ts.values()).enumerate() {
        let _ = write!(out, "{t},{y}");
        for p in &stage_preds {
            let _ = write!(out, ",{}", p[i]);
        }
        let _ = writeln!(out, ",{}", y - last[i]);
    }
    Ok(out)
}

pub fn cmd_export_plot(cfg: &RunConfig, model_path: &Path, out: &Path) -> Result<String> {
    let model = load_model(model_path)?;
    let ts = load_series(cfg)?;
    let csv = decomposition_csv(&model, &ts)?;
    ensure_parent(out)?;
    write_atomic(out, csv.as_bytes())?;
    Ok(csv)
}

/// Usage, configuration and path problems exit with 2, everything else with 1.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io { .. } => 2,
        _ => 1,
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Fit(args) => {
            let mut cfg = resolve_config(&args.common)?;
            if let Some(out) = args.out {
                cfg.out_dir = out;
            }
            let fit = cmd_fit(&cfg, args.model.as_deref())?;
            print!("{}", stage_log(&fit.model));
            println!("stop: {}", fit.model.stop.as_str());
            println!("model written to {}", fit.model_path.display());
        }
        Command::Forecast(args) => {
            let cfg = resolve_config(&args.common)?;
            let model = args.model.unwrap_or_else(|| cfg.out_dir.join(MODEL_FILE));
            let out = args.out.unwrap_or_else(|| cfg.out_dir.join(FORECAST_FILE));
            cmd_forecast(&cfg, &model, args.horizon.unwrap_or(cfg.horizon), &out)?;
            println!("forecast written to {}", out.display());
        }
        Command::Benchmark(args) => {
            let mut cfg = resolve_config(&args.common)?;
            if let Some(out) = args.out {
                cfg.out_dir = out;
            }
            let bench = cmd_benchmark(&cfg)?;
            print!("{}", bench.table);
            for row in &bench.report.rows {
                if let Err(msg) = &row.outcome {
                    eprintln!("warning: {} / {}: {msg}", row.series, row.model);
                }
            }
            println!("report written to {}", bench.csv_path.display());
        }
        Command::ExportPlot(args) => {
            let cfg = resolve_config(&args.common)?;
            let model = args.model.unwrap_or_else(|| cfg.out_dir.join(MODEL_FILE));
            let out = args
                .out
                .unwrap_or_else(|| cfg.out_dir.join(DECOMPOSITION_FILE));
            cmd_export_plot(&cfg, &model, &out)?;
            println!("decomposition written to {}", out.display());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
