//! Forecast accuracy: SMAPE, baseline forecasters, the train/test
//! backtest and report tables.

use std::fmt::Write as _;
use std::time::Instant;

use crate::boosting::{deepgb_fit, deepgb_predict, BoostConfig};
use crate::error::{Error, Result};
use crate::gbdt::GbdtConfig;
use crate::series::{extract_calendar_features, FeatureName, SplitSpec, TimeSeries};

/// Symmetric MAPE in percent, between 0 and 200.
///
/// `(100/n) * sum(2|f - a| / (|a| + |f|))`; a term with `|a| + |f| = 0`
/// contributes 0.
pub fn smape(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    if actual.len() != forecast.len() {
        return Err(Error::Metric(format!(
            "{} actual values but {} forecasts",
            actual.len(),
            forecast.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Metric("cannot score an empty forecast".into()));
    }
    let total: f64 = actual
        .iter()
        .zip(forecast)
        .map(|(a, f)| {
            let denom = a.abs() + f.abs();
            if denom == 0.0 {
                0.0
            } else {
                2.0 * (f - a).abs() / denom
            }
        })
        .sum();
    Ok(100.0 * total / actual.len() as f64)
}

/// Repeats the last `period` observations over the horizon.
pub fn seasonal_naive(train: &[f64], horizon: usize, period: usize) -> Result<Vec<f64>> {
    if period == 0 {
        return Err(Error::Config("seasonal period must be at least 1".into()));
    }
    if train.len() < period {
        return Err(Error::Fit(format!(
            "seasonal naive needs {period} observations, have {}",
            train.len()
        )));
    }
    let last = &train[train.len() - period..];
    Ok((0..horizon).map(|t| last[t % period]).collect())
}

/// Damping added to the normal equations when they are singular.
pub const RIDGE_DAMPING: f64 = 1e-8;

/// Least-squares AR(p) with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    pub intercept: f64,
    /// `coefficients[k]` multiplies `y_{t-1-k}`.
    pub coefficients: Vec<f64>,
    /// True when the ridge fallback was needed.
    pub damped: bool,
}

impl ArModel {
    pub fn fit(train: &[f64], order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("AR order must be at least 1".into()));
        }
        if train.len() <= order + 1 {
            return Err(Error::Fit(format!(
                "AR({order}) needs more than {} observations, have {}",
                order + 1,
                train.len()
            )));
        }
        let k = order + 1;
        let mut xtx = vec![0.0; k * k];
        let mut xty = vec![0.0; k];
        let mut row = vec![0.0; k];
        for t in order..train.len() {
            row[0] = 1.0;
            for lag in 1..=order {
                row[lag] = train[t - lag];
            }
            for i in 0..k {
                xty[i] += row[i] * train[t];
                for j in 0..k {
                    xtx[i * k + j] += row[i] * row[j];
                }
            }
        }
        let (beta, damped) = match solve(xtx.clone(), xty.clone(), k) {
            Some(b) => (b, false),
            None => {
                let mut damped = xtx;
                for i in 0..k {
                    damped[i * k + i] += RIDGE_DAMPING;
                }
                let b = solve(damped, xty, k).ok_or_else(|| {
                    Error::Fit("AR normal equations are singular even with damping".into())
                })?;
                (b, true)
            }
        };
        Ok(Self {
            intercept: beta[0],
            coefficients: beta[1..].to_vec(),
            damped,
        })
    }

    /// Recursive multi-step forecast continuing `history`.
    pub fn forecast(&self, history: &[f64], horizon: usize) -> Vec<f64> {
        let p = self.coefficients.len();
        let mut buf: Vec<f64> = history[history.len().saturating_sub(p)..].to_vec();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let n = buf.len();
            let next = self.intercept
                + self
                    .coefficients
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * buf[n - 1 - k])
                    .sum::<f64>();
            out.push(next);
            buf.push(next);
        }
        out
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(1.0, f64::max);
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() <= 1e-12 * scale {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            b.swap(pivot, col);
        }
        for i in col + 1..n {
            let f = a[i * n + col] / a[col * n + col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[i * n + j] -= f * a[col * n + j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i * n + j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i * n + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Fits AR(p) by least squares and forecasts `horizon` steps recursively.
pub fn linear_ar(train: &[f64], order: usize, horizon: usize) -> Result<Vec<f64>> {
    Ok(ArModel::fit(train, order)?.forecast(train, horizon))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineSpec {
    /// Period in observations.
    SeasonalNaive {
        period: usize,
    },
    LinearAr {
        order: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepGbSpec {
    pub features: Vec<FeatureName>,
    pub boost: BoostConfig,
    pub gbdt: GbdtConfig,
}

/// A forecaster taking part in a backtest.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    DeepGb(Box<DeepGbSpec>),
    Baseline(BaselineSpec),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::DeepGb(_) => "deepgb",
            ModelSpec::Baseline(BaselineSpec::SeasonalNaive { .. }) => "seasonal_naive",
            ModelSpec::Baseline(BaselineSpec::LinearAr { .. }) => "linear_ar",
        }
    }

    /// Fits on `train` and forecasts the next `horizon` steps.
    pub fn fit_forecast(&self, train: &TimeSeries, horizon: usize) -> Result<Vec<f64>> {
        match self {
            ModelSpec::DeepGb(spec) => {
                let fm = extract_calendar_features(train, &spec.features)?;
                let model = deepgb_fit(train, &fm, &spec.boost, &spec.gbdt)?;
                let future = model.features_for(&train.future_timestamps(horizon))?;
                deepgb_predict(&model, &future)
            }
            ModelSpec::Baseline(BaselineSpec::SeasonalNaive { period }) => {
                seasonal_naive(train.values(), horizon, *period)
            }
            ModelSpec::Baseline(BaselineSpec::LinearAr { order }) => {
                linear_ar(train.values(), *order, horizon)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    /// Percent, 0..=200.
    pub smape: f64,
    /// Wall-clock fit-and-forecast time.
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub series: String,
    pub model: String,
    /// `Err` holds the failure message for this (series, model) pair.
    pub outcome: std::result::Result<Score, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub protocol: SplitSpec,
}

/// Fits every model on each series' training window and scores the
/// trailing test window. Failures are recorded per row.
pub fn backtest(series: &[TimeSeries], models: &[ModelSpec], split: SplitSpec) -> EvalReport {
    let mut order: Vec<&TimeSeries> = series.iter().collect();
    order.sort_by(|a, b| a.name().cmp(b.name()));
    let mut rows = Vec::with_capacity(series.len() * models.len());
    for ts in order {
        let windows = split
            .windows(ts.len(), ts.step())
            .and_then(|(train, test)| Ok((ts.slice(train)?, ts.values()[test].to_vec())));
        for model in models {
            let outcome = match &windows {
                Err(e) => Err(e.to_string()),
                Ok((train, actual)) => {
                    let start = Instant::now();
                    model
                        .fit_forecast(train, actual.len())
                        .map(|forecast| (forecast, start.elapsed().as_secs_f64()))
                        .and_then(|(forecast, secs)| {
                            Ok(Score {
                                smape: smape(actual, &forecast)?,
                                train_seconds: secs,
                            })
                        })
                        .map_err(|e| e.to_string())
                }
            };
            rows.push(ReportRow {
                series: ts.name().to_string(),
                model: model.name().to_string(),
                outcome,
            });
        }
    }
    EvalReport {
        rows,
        protocol: split,
    }
}

impl EvalReport {
    fn models(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.model.as_str()) {
                names.push(&r.model);
            }
        }
        names
    }

    fn series(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.series.as_str()) {
                names.push(&r.series);
            }
        }
        names
    }

    pub fn score(&self, series: &str, model: &str) -> Option<Score> {
        self.rows
            .iter()
            .find(|r| r.series == series && r.model == model)
            .and_then(|r| r.outcome.as_ref().ok().copied())
    }

    /// Models with the lowest SMAPE on `series` (several on a tie).
    pub fn best_models(&self, series: &str) -> Vec<&str> {
        let scored: Vec<(&str, f64)> = self
            .rows
            .iter()
            .filter(|r| r.series == series)
            .filter_map(|r| r.outcome.as_ref().ok().map(|s| (r.model.as_str(), s.smape)))
            .collect();
        let Some(best) = scored.iter().map(|s| s.1).min_by(f64::total_cmp) else {
            return Vec::new();
        };
        scored
            .into_iter()
            .filter(|s| s.1 == best)
            .map(|s| s.0)
            .collect()
    }

    /// `series,model,smape,train_seconds`; failed rows leave both metrics empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,model,smape,train_seconds\n");
        for r in &self.rows {
            match &r.outcome {
                Ok(s) => writeln!(
                    out,
                    "{},{},{},{}",
                    r.series, r.model, s.smape, s.train_seconds
                ),
                Err(_) => writeln!(out, "{},{},,", r.series, r.model),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Human-readable table: one row per series, SMAPE then training time for
/// each model. The lowest SMAPE of a row is marked with `*`.
pub fn render_table(report: &EvalReport) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::Metric("report has no rows".into()));
    }
    let models = report.models();
    let mut header = vec!["Dataset".to_string()];
    header.extend(models.iter().map(|m| format!("SMAPE {m}")));
    header.extend(models.iter().map(|m| format!("Time(s) {m}")));
    let mut lines = vec![header];
    for series in report.series() {
        let best = report.best_models(series);
        let mut line = vec![series.to_string()];
        for m in &models {
            line.push(match report.score(series, m) {
                Some(s) if best.contains(m) => format!("{:.2}*", s.smape),
                Some(s) => format!("{:.2}", s.smape),
                None => "error".into(),
            });
        }
        for m in &models {
            line.push(match report.score(series, m) {
                Some(s) => format!("{:.3}", s.train_seconds),
                None => "-".into(),
            });
        }
        lines.push(line);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, w))| {
                if c == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    writeln!(
        out,
        "SMAPE in percent (lower is better, * = best); protocol {} train / {} test days",
        report.protocol.train_days, report.protocol.test_days
    )
    .expect("writing to a String cannot fail");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smape_hand_values() {
        assert_eq!(smape(&[1.0, -3.0, 7.5], &[1.0, -3.0, 7.5]).unwrap(), 0.0);
        assert!((smape(&[100.0], &[50.0]).unwrap() - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(smape(&[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(smape(&[0.0, 5.0], &[3.0, 0.0]).unwrap(), 200.0);
        assert!(smape(&[1.0], &[1.0, 2.0]).is_err());
        assert!(smape(&[], &[]).is_err());
    }

    #[test]
    fn seasonal_naive_tiles() {
        assert_eq!(
            seasonal_naive(&[9.0, 3.0, 7.0], 4, 2).unwrap(),
            vec![3.0, 7.0, 3.0, 7.0]
        );
        assert_eq!(seasonal_naive(&[1.0, 4.0], 3, 1).unwrap(), vec![4.0; 3]);
        assert!(seasonal_naive(&[1.0], 3, 2).is_err());
    }

    #[test]
    fn ar_recovers_half_decay() {
        let y: Vec<f64> = (0..40).map(|t| 8.0 * 0.5f64.powi(t)).collect();
        let m = ArModel::fit(&y, 1).unwrap();
        assert!((m.coefficients[0] - 0.5).abs() < 1e-6, "{m:?}");
        assert!(m.intercept.abs() < 1e-6);
    }

    #[test]
    fn ar_constant_series_uses_ridge_and_stays_constant() {
        let y = [4.0; 20];
        let m = ArModel::fit(&y, 2).unwrap();
        assert!(m.damped);
        for f in m.forecast(&y, 10) {
            assert!((f - 4.0).abs() < 1e-6, "{f}");
        }
    }

    #[test]
    fn ar_order_too_large() {
        assert!(matches!(
            linear_ar(&[1.0, 2.0, 3.0], 5, 2),
            Err(Error::Fit(_))
        ));
        assert!(matches!(
            linear_ar(&[1.0, 2.0, 3.0], 2, 2),
            Err(Error::Fit(_))
        ));
        assert!(linear_ar(&[1.0, 2.0, 3.0, 5.0], 2, 2).is_ok());
    }

    fn report(rows: &[(&str, &str, Option<f64>)]) -> EvalReport {
        EvalReport {
            rows: rows
                .iter()
                .map(|&(s, m, v)| ReportRow {
                    series: s.into(),
                    model: m.into(),
                    outcome: v
                        .map(|smape| Score {
                            smape,
                            train_seconds: 0.5,
                        })
                        .ok_or_else(|| "boom".to_string()),
                })
                .collect(),
            protocol: SplitSpec::default(),
        }
    }

    #[test]
    fn table_single_row() {
        let t = render_table(&report(&[("P1", "deepgb", Some(2.345))])).unwrap();
        assert!(t.contains("2.35*") || t.contains("2.34*"), "{t}");
        assert!(t.contains("0.500"));
        assert!(t.lines().next().unwrap().contains("SMAPE deepgb"));
    }

    #[test]
    fn table_marks_ties() {
        let t = render_table(&report(&[
            ("P1", "deepgb", Some(1.5)),
            ("P1", "seasonal_naive", Some(1.5)),
            ("P1", "linear_ar", Some(3.0)),
        ]))
        .unwrap();
        assert_eq!(t.matches("1.50*").count(), 2, "{t}");
        assert!(t.contains("3.00") && !t.contains("3.00*"));
    }

    #[test]
    fn table_shows_failures_and_rejects_empty() {
        let t = render_table(&report(&[
            ("P1", "deepgb", None),
            ("P1", "linear_ar", Some(4.0)),
        ]))
        .unwrap();
        assert!(t.contains("error"));
        assert!(render_table(&report(&[])).is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = report(&[("P1", "deepgb", Some(1.25)), ("P1", "linear_ar", None)]).to_csv();
        assert_eq!(
            csv,
            "series,model,smape,train_seconds\nP1,deepgb,1.25,0.5\nP1,linear_ar,,\n"
        );
    }

    proptest::proptest! {
        #[test]
        fn smape_symmetric_bounded_scale_free(
            pairs in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..50),
            c in 1e-3f64..1e3,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let f: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let s = smape(&a, &f).unwrap();
            proptest::prop_assert!((0.0..=200.0).contains(&s));
            proptest::prop_assert!((s - smape(&f, &a).unwrap()).abs() < 1e-9);
            let ca: Vec<f64> = a.iter().map(|v| v * c).collect();
            let cf: Vec<f64> = f.iter().map(|v| v * c).collect();
            proptest::prop_assert!((s - smape(&ca, &cf).unwrap()).abs() < 1e-9);
        }
    }
}
