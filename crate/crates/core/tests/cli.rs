use std::path::{Path, PathBuf};
use std::process::Command;

use deepgb::cli::{
    cmd_benchmark, cmd_export_plot, cmd_fit, cmd_forecast, decomposition_csv, load_series,
};
use deepgb::config::RunConfig;
use deepgb::format::load_model;
use deepgb::series::write_long_csv;
use deepgb::synthetic::{weekday_lookup, WeeklyHourly, DEFAULT_START};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn fit_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&fixture("fit.conf")).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_deepgb"));
    for (k, _) in std::env::vars() {
        if k.starts_with("DEEPGB_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn fit_writes_model_stage_log_and_config() {
    let dir = TempDir::new().unwrap();
    let out = cmd_fit(&fit_config(dir.path()), None).unwrap();
    assert_eq!(out.model.stages.len(), 2);
    assert_eq!(load_model(&out.model_path).unwrap(), out.model);
    let log = std::fs::read_to_string(&out.stage_log_path).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(
        lines[0],
        "stage,feature,delta,residual_mean_abs,final_loss,early_stop"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,dayofweek,"));
    assert!(lines[2].starts_with("2,hour,") && lines[2].ends_with(",false"));
}

#[test]
fn max_stages_one_gives_one_record() {
    let dir = TempDir::new().unwrap();
    let mut cfg = fit_config(dir.path());
    cfg.max_stages = Some(1);
    assert_eq!(cmd_fit(&cfg, None).unwrap().model.stages.len(), 1);
}

#[test]
fn effective_config_reproduces_the_model_file() {
    let dir = TempDir::new().unwrap();
    let first = cmd_fit(&fit_config(dir.path()), None).unwrap();
    let reloaded = RunConfig::load(&first.config_path).unwrap();
    let again = dir.path().join("again.deepgb");
    cmd_fit(&reloaded, Some(&again)).unwrap();
    assert_eq!(
        std::fs::read(&first.model_path).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn daily_forecast_rows_and_empty_horizon() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("daily.csv");
    let ts = weekday_lookup(
        "daily",
        [3.0, 4.0, 5.0, 6.0, 7.0, 1.0, 2.0],
        DEFAULT_START,
        86_400,
        40,
    )
    .unwrap();
    write_long_csv(std::fs::File::create(&data).unwrap(), &ts).unwrap();
    let text = format!(
        "data = {}\nlayout = long\nfeatures = dayofweek\nepochs = 5\nn_trees = 5\nout_dir = {}\n",
        data.display(),
        dir.path().display()
    );
    let cfg_path = dir.path().join("daily.conf");
    std::fs::write(&cfg_path, text).unwrap();
    let cfg = RunConfig::load(&cfg_path).unwrap();
    let model = cmd_fit(&cfg, None).unwrap().model_path;

    let csv = cmd_forecast(&cfg, &model, 3, &dir.path().join("f.csv")).unwrap();
    let r = rows(&csv);
    assert_eq!(r.len(), 3);
    let last = *ts.timestamps().last().unwrap();
    for (i, row) in r.iter().enumerate() {
        assert_eq!(
            row[0].parse::<i64>().unwrap(),
            last + 86_400 * (i as i64 + 1)
        );
        assert!(row[1].parse::<f64>().unwrap().is_finite());
    }

    let empty = cmd_forecast(&cfg, &model, 0, &dir.path().join("empty.csv")).unwrap();
    assert_eq!(empty, "timestamp,forecast\n");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("empty.csv")).unwrap(),
        empty
    );
}

#[test]
fn forecast_follows_the_generator() {
    let dir = TempDir::new().unwrap();
    let cfg = fit_config(dir.path());
    let fit = cmd_fit(&cfg, None).unwrap();
    let csv = cmd_forecast(&cfg, &fit.model_path, 72, &dir.path().join("f.csv")).unwrap();
    let forecast: Vec<f64> = rows(&csv).iter().map(|r| r[1].parse().unwrap()).collect();
    // Same calendar grid three days further on; the clean signal only
    // depends on the timestamp.
    let longer = WeeklyHourly {
        days: 36,
        ..WeeklyHourly::default()
    }
    .generate()
    .unwrap();
    let clean = longer.clean();
    let truth = &clean[clean.len() - 72..];
    let stamps: Vec<i64> = rows(&csv).iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(stamps, longer.series.timestamps()[clean.len() - 72..]);
    let corr = correlation(&forecast, truth);
    assert!(corr > 0.9, "correlation {corr}");
}

#[test]
fn export_plot_columns_and_residual_identity() {
    let dir = TempDir::new().unwrap();
    let cfg = fit_config(dir.path());
    let fit = cmd_fit(&cfg, None).unwrap();
    let csv = cmd_export_plot(&cfg, &fit.model_path, &dir.path().join("d.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "timestamp,y,stage_1_pred,stage_2_pred,residual"
    );

    let ts = load_series(&cfg).unwrap();
    let fm = fit.model.features_for(ts.timestamps()).unwrap();
    let composite = fit
        .model
        .scaler
        .inverse(&fit.model.composite.predict(&fm).unwrap());
    let r = rows(&csv);
    assert_eq!(r.len(), ts.len());
    for (i, row) in r.iter().enumerate() {
        assert_eq!(row.len(), 5);
        let y: f64 = row[1].parse().unwrap();
        let residual: f64 = row[4].parse().unwrap();
        assert!((residual - (y - composite[i])).abs() < 1e-9);
    }

    let mut stageless = fit.model.clone();
    stageless.stages.clear();
    assert!(decomposition_csv(&stageless, &ts).is_err());
}

#[test]
fn noiseless_decomposition_leaves_small_residual() {
    let dir = TempDir::new().unwrap();
    let gen = WeeklyHourly {
        noise_std: 0.0,
        ..WeeklyHourly::default()
    };
    let data = dir.path().join("clean.csv");
    write_long_csv(
        std::fs::File::create(&data).unwrap(),
        &gen.generate().unwrap().series,
    )
    .unwrap();
    // Tuned below the default step size so RMSProp settles close enough.
    let text = format!(
        "data = {}\nlayout = long\nepochs = 1000\nbatch_size = 16\nlearning_rate = 0.00005\ndropout = 0\n\
         n_trees = 10\nout_dir = {}\n",
        data.display(),
        dir.path().display()
    );
    let cfg_path = dir.path().join("clean.conf");
    std::fs::write(&cfg_path, text).unwrap();
    let cfg = RunConfig::load(&cfg_path).unwrap();
    let fit = cmd_fit(&cfg, None).unwrap();
    let csv = cmd_export_plot(&cfg, &fit.model_path, &dir.path().join("d.csv")).unwrap();
    let worst = rows(&csv)
        .iter()
        .map(|r| r[4].parse::<f64>().unwrap().abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.01 * gen.amplitude, "max |residual| {worst}");
}

#[test]
fn benchmark_suite_has_nine_rows_and_stable_smape() {
    let dir = TempDir::new().unwrap();
    let mut cfg = RunConfig::load(&fixture("benchmark.conf")).unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    let a = cmd_benchmark(&cfg).unwrap();
    let b = cmd_benchmark(&cfg).unwrap();
    assert_eq!(a.report.rows.len(), 9);
    let smapes = |r: &deepgb::eval::EvalReport| {
        r.rows
            .iter()
            .map(|r| r.outcome.as_ref().unwrap().smape)
            .collect::<Vec<_>>()
    };
    assert_eq!(smapes(&a.report), smapes(&b.report));
    let csv = std::fs::read_to_string(&a.csv_path).unwrap();
    assert_eq!(csv.lines().count(), 10);
    for series in ["suite_a", "suite_b", "suite_c"] {
        let deep = a.report.score(series, "deepgb").unwrap().smape;
        let naive = a.report.score(series, "seasonal_naive").unwrap().smape;
        assert!(deep < naive, "{series}: {deep} vs {naive}");
    }
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn binary_round_trip() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    let conf = fixture("fit.conf");
    let status = bin()
        .args(["fit", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(String::from_utf8_lossy(&status.stdout).contains("stop: stages_exhausted"));

    let model = out.join("model.deepgb");
    let forecast = out.join("forecast.csv");
    let status = bin()
        .args(["forecast", "--config"])
        .arg(&conf)
        .arg("--model")
        .arg(&model)
        .args(["--horizon", "5", "--out"])
        .arg(&forecast)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(&forecast).unwrap().lines().count(),
        6
    );

    let plot = out.join("plot.csv");
    let status = bin()
        .args(["export-plot", "--config"])
        .arg(&conf)
        .arg("--model")
        .arg(&model)
        .arg("--out")
        .arg(&plot)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(plot.exists());
}

#[test]
fn environment_overrides_reach_the_binary() {
    let dir = TempDir::new().unwrap();
    let status = bin()
        .env("DEEPGB_MAX_STAGES", "1")
        .args(["fit", "--config"])
        .arg(fixture("fit.conf"))
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let log = std::fs::read_to_string(dir.path().join("stages.csv")).unwrap();
    assert_eq!(log.lines().count(), 2);
}

#[test]
fn exit_codes() {
    let missing = bin()
        .args(["fit", "--data", "/no/such/input.csv"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/input.csv"));

    let no_config = bin()
        .args(["benchmark", "--config", "/no/such/run.conf"])
        .output()
        .unwrap();
    assert_eq!(no_config.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_config.stderr).contains("/no/such/run.conf"));

    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "learning_rat = 0.1\n").unwrap();
    let unknown = bin().args(["fit", "--config"]).arg(&conf).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("learning_rat"));

    assert_eq!(
        bin().args(["fit", "--bogus"]).status().unwrap().code(),
        Some(2)
    );

    let corrupt = dir.path().join("corrupt.deepgb");
    std::fs::write(&corrupt, "deepgb-model 1\nscaler nope\n").unwrap();
    let runtime = bin()
        .args(["forecast", "--config"])
        .arg(fixture("fit.conf"))
        .arg("--model")
        .arg(&corrupt)
        .arg("--out")
        .arg(dir.path().join("f.csv"))
        .output()
        .unwrap();
    assert_eq!(runtime.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&runtime.stderr).contains("line 2"));
}
