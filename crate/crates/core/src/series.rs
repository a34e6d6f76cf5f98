//! Univariate series, CSV ingestion, calendar features and the
//! train/test protocol.

use std::fmt;
use std::io::Read;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike, Utc};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Uniformly spaced observations with epoch-second timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    timestamps: Vec<i64>,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Validates length, finiteness and constant positive spacing.
    pub fn new(name: impl Into<String>, timestamps: Vec<i64>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if timestamps.len() != values.len() {
            return Err(Error::Shape(format!(
                "series '{name}': {} timestamps but {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if timestamps.is_empty() {
            return Err(Error::EmptySeries(name));
        }
        if timestamps.len() < 2 {
            return Err(Error::Spacing {
                series: name,
                message: "at least two observations are required".into(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!(
                "series '{name}': value at index {i} is not finite"
            )));
        }
        let step = timestamps[1] - timestamps[0];
        if step <= 0 {
            return Err(Error::Spacing {
                series: name,
                message: format!("timestamps must be strictly increasing (step {step})"),
            });
        }
        for (i, w) in timestamps.windows(2).enumerate() {
            if w[1] - w[0] != step {
                return Err(Error::Spacing {
                    series: name,
                    message: format!(
                        "gap of {} s between index {} and {}, expected {step} s",
                        w[1] - w[0],
                        i,
                        i + 1
                    ),
                });
            }
        }
        Ok(Self {
            name,
            timestamps,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Seconds between consecutive observations.
    pub fn step(&self) -> i64 {
        self.timestamps[1] - self.timestamps[0]
    }

    /// Sub-series over `range`. Slices shorter than two points are rejected.
    pub fn slice(&self, range: Range<usize>) -> Result<TimeSeries> {
        TimeSeries::new(
            self.name.clone(),
            self.timestamps[range.clone()].to_vec(),
            self.values[range].to_vec(),
        )
    }

    /// Timestamps of the `horizon` steps following the last observation.
    pub fn future_timestamps(&self, horizon: usize) -> Vec<i64> {
        let last = *self.timestamps.last().expect("series is never empty");
        let step = self.step();
        (1..=horizon as i64).map(|k| last + k * step).collect()
    }
}

/// Supported calendar features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureName {
    DayOfWeek,
    Hour,
    Month,
    DayOfMonth,
}

impl FeatureName {
    pub const ALL: [FeatureName; 4] = [
        FeatureName::DayOfWeek,
        FeatureName::Hour,
        FeatureName::Month,
        FeatureName::DayOfMonth,
    ];

    pub fn cardinality(self) -> usize {
        match self {
            FeatureName::DayOfWeek => 7,
            FeatureName::Hour => 24,
            FeatureName::Month => 12,
            FeatureName::DayOfMonth => 31,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureName::DayOfWeek => "dayofweek",
            FeatureName::Hour => "hour",
            FeatureName::Month => "month",
            FeatureName::DayOfMonth => "dayofmonth",
        }
    }

    /// Zero-based code of `dt` (Monday = 0 for day of week).
    pub fn code(self, dt: &DateTime<Utc>) -> u32 {
        match self {
            FeatureName::DayOfWeek => dt.weekday().num_days_from_monday(),
            FeatureName::Hour => dt.hour(),
            FeatureName::Month => dt.month0(),
            FeatureName::DayOfMonth => dt.day0(),
        }
    }
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureName::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unsupported feature '{s}' (expected one of dayofweek, hour, month, dayofmonth)"
                ))
            })
    }
}

/// One categorical column: a code per timestep, each below `cardinality`.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalFeature {
    name: String,
    cardinality: usize,
    codes: Vec<u32>,
}

impl CategoricalFeature {
    pub fn new(name: impl Into<String>, cardinality: usize, codes: Vec<u32>) -> Result<Self> {
        let name = name.into();
        if cardinality == 0 {
            return Err(Error::Config(format!(
                "feature '{name}' has zero cardinality"
            )));
        }
        if let Some((row, &code)) = codes
            .iter()
            .enumerate()
            .find(|(_, &c)| c as usize >= cardinality)
        {
            return Err(Error::Lookup {
                feature: name,
                row,
                code,
                rows: cardinality,
            });
        }
        Ok(Self {
            name,
            cardinality,
            codes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }
}

/// Affine map from timestamps onto the continuous time index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeScale {
    pub origin: i64,
    pub span: i64,
}

impl TimeScale {
    /// Maps the first timestamp to 0 and the last to 1.
    pub fn spanning(timestamps: &[i64]) -> Self {
        let origin = timestamps.first().copied().unwrap_or(0);
        let last = timestamps.last().copied().unwrap_or(origin);
        Self {
            origin,
            span: last - origin,
        }
    }

    pub fn apply(&self, t: i64) -> f64 {
        if self.span == 0 {
            0.0
        } else {
            (t - self.origin) as f64 / self.span as f64
        }
    }
}

/// Per-timestep categorical codes plus the continuous time index.
///
/// Feature order is the boosting stage order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    features: Vec<CategoricalFeature>,
    time_index: Vec<f64>,
    time_scale: TimeScale,
}

impl FeatureMatrix {
    pub fn new(
        features: Vec<CategoricalFeature>,
        time_index: Vec<f64>,
        time_scale: TimeScale,
    ) -> Result<Self> {
        for f in &features {
            if f.codes.len() != time_index.len() {
                return Err(Error::Shape(format!(
                    "feature '{}' has {} codes, time index has {}",
                    f.name,
                    f.codes.len(),
                    time_index.len()
                )));
            }
        }
        Ok(Self {
            features,
            time_index,
            time_scale,
        })
    }

    /// Number of rows (timesteps).
    pub fn len(&self) -> usize {
        self.time_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_index.is_empty()
    }

    pub fn features(&self) -> &[CategoricalFeature] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&CategoricalFeature> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn time_index(&self) -> &[f64] {
        &self.time_index
    }

    pub fn time_scale(&self) -> TimeScale {
        self.time_scale
    }

    pub fn code_columns(&self) -> Vec<&[u32]> {
        self.features.iter().map(|f| f.codes.as_slice()).collect()
    }

    pub fn slice(&self, range: Range<usize>) -> FeatureMatrix {
        FeatureMatrix {
            features: self
                .features
                .iter()
                .map(|f| CategoricalFeature {
                    name: f.name.clone(),
                    cardinality: f.cardinality,
                    codes: f.codes[range.clone()].to_vec(),
                })
                .collect(),
            time_index: self.time_index[range].to_vec(),
            time_scale: self.time_scale,
        }
    }
}

/// Calendar features of `ts` in UTC; the time index spans the series.
pub fn extract_calendar_features(ts: &TimeSeries, names: &[FeatureName]) -> Result<FeatureMatrix> {
    calendar_features_at(ts.timestamps(), names, TimeScale::spanning(ts.timestamps()))
}

/// Calendar features for arbitrary timestamps under a fixed time scale.
pub fn calendar_features_at(
    timestamps: &[i64],
    names: &[FeatureName],
    scale: TimeScale,
) -> Result<FeatureMatrix> {
    if names.is_empty() {
        return Err(Error::Config("feature list is empty".into()));
    }
    let datetimes = timestamps
        .iter()
        .map(|&t| {
            DateTime::<Utc>::from_timestamp(t, 0)
                .ok_or_else(|| Error::Shape(format!("timestamp {t} is out of range")))
        })
        .collect::<Result<Vec<_>>>()?;
    let features = names
        .iter()
        .map(|&name| CategoricalFeature {
            name: name.as_str().to_string(),
            cardinality: name.cardinality(),
            codes: datetimes.iter().map(|dt| name.code(dt)).collect(),
        })
        .collect();
    let time_index = timestamps.iter().map(|&t| scale.apply(t)).collect();
    FeatureMatrix::new(features, time_index, scale)
}

/// Training/test window lengths in days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_days: usize,
    pub test_days: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_days: 30,
            test_days: 3,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train_days == 0 || self.test_days == 0 {
            return Err(Error::Config(format!(
                "train_days and test_days must be at least 1 (got {} and {})",
                self.train_days, self.test_days
            )));
        }
        Ok(())
    }

    /// Index ranges `(train, test)` for a series of `len` points spaced
    /// `step` seconds apart: the test window is the trailing block and the
    /// training window ends where it begins.
    pub fn windows(&self, len: usize, step: i64) -> Result<(Range<usize>, Range<usize>)> {
        self.validate()?;
        let per_day = points_per_day(step)?;
        let train = self.train_days * per_day;
        let test = self.test_days * per_day;
        if train + test > len {
            return Err(Error::Split {
                required: train + test,
                available: len,
            });
        }
        let test_start = len - test;
        Ok((test_start - train..test_start, test_start..len))
    }
}

pub(crate) fn points_per_day(step: i64) -> Result<usize> {
    if step <= 0 || step > SECONDS_PER_DAY || SECONDS_PER_DAY % step != 0 {
        return Err(Error::Config(format!(
            "step of {step} s does not divide a day evenly"
        )));
    }
    Ok((SECONDS_PER_DAY / step) as usize)
}

/// A window of a series together with its feature rows.
#[derive(Debug, Clone)]
pub struct SplitPart {
    pub series: TimeSeries,
    pub features: FeatureMatrix,
    pub range: Range<usize>,
}

/// Splits into the trailing test window and the training window right before it.
pub fn train_test_split(
    ts: &TimeSeries,
    fm: &FeatureMatrix,
    spec: SplitSpec,
) -> Result<(SplitPart, SplitPart)> {
    if fm.len() != ts.len() {
        return Err(Error::Shape(format!(
            "feature matrix has {} rows, series has {}",
            fm.len(),
            ts.len()
        )));
    }
    let (train, test) = spec.windows(ts.len(), ts.step())?;
    let part = |range: Range<usize>| -> Result<SplitPart> {
        // One-point windows are valid here even though TimeSeries needs two.
        let series = if range.len() >= 2 {
            ts.slice(range.clone())?
        } else {
            TimeSeries {
                name: ts.name.clone(),
                timestamps: ts.timestamps[range.clone()].to_vec(),
                values: ts.values[range.clone()].to_vec(),
            }
        };
        Ok(SplitPart {
            series,
            features: fm.slice(range.clone()),
            range,
        })
    };
    Ok((part(train)?, part(test)?))
}

/// Mean and population standard deviation of a training window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    pub mean: f64,
    pub std: f64,
}

impl Scaler {
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        let std = if std > 0.0 && std.is_finite() {
            std
        } else {
            1.0
        };
        Self { mean, std }
    }

    pub fn transform(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| (v - self.mean) / self.std).collect()
    }

    pub fn inverse_one(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }

    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|&v| self.inverse_one(v)).collect()
    }
}

/// Standardizes to zero mean and unit variance; a constant input uses std 1.
pub fn standardize(values: &[f64]) -> (Scaler, Vec<f64>) {
    let scaler = Scaler::fit(values);
    let z = scaler.transform(values);
    (scaler, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CsvLayout {
    /// `series,<date>,<date>,...`: one series per row.
    #[default]
    Wide,
    /// `timestamp,value`: one series per file.
    Long,
}

impl FromStr for CsvLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "wide" => Ok(CsvLayout::Wide),
            "long" => Ok(CsvLayout::Long),
            other => Err(Error::Config(format!("unknown layout '{other}'"))),
        }
    }
}

impl fmt::Display for CsvLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CsvLayout::Wide => "wide",
            CsvLayout::Long => "long",
        })
    }
}

/// What to do with empty cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Drop every missing observation. Interior gaps then fail the spacing check.
    DropLeading,
    /// Trim leading/trailing gaps and interpolate interior ones linearly.
    #[default]
    Interpolate,
}

impl FromStr for MissingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "drop_leading" => Ok(MissingPolicy::DropLeading),
            "interpolate" => Ok(MissingPolicy::Interpolate),
            other => Err(Error::Config(format!("unknown missing policy '{other}'"))),
        }
    }
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingPolicy::DropLeading => "drop_leading",
            MissingPolicy::Interpolate => "interpolate",
        })
    }
}

/// Reads every series in a CSV file.
pub fn load_csv(path: &Path, layout: CsvLayout, policy: MissingPolicy) -> Result<Vec<TimeSeries>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".to_string());
    read_csv(file, &name, layout, policy)
}

/// Like [`load_csv`] over any reader; `name` labels a long-layout series.
pub fn read_csv<R: Read>(
    reader: R,
    name: &str,
    layout: CsvLayout,
    policy: MissingPolicy,
) -> Result<Vec<TimeSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: i + 1,
            column: 0,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    let Some((header, body)) = records.split_first() else {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "file has no header row".into(),
        });
    };
    match layout {
        CsvLayout::Wide => read_wide(header, body, policy),
        CsvLayout::Long => read_long(header, body, name, policy),
    }
}

fn read_wide(
    header: &csv::StringRecord,
    body: &[csv::StringRecord],
    policy: MissingPolicy,
) -> Result<Vec<TimeSeries>> {
    if header.len() < 2 {
        return Err(Error::Parse {
            row: 1,
            column: 2,
            message: "wide header needs at least one date column".into(),
        });
    }
    let timestamps = header
        .iter()
        .enumerate()
        .skip(1)
        .map(|(c, cell)| {
            parse_timestamp(cell).ok_or_else(|| Error::Parse {
                row: 1,
                column: c + 1,
                message: format!("'{cell}' is not an ISO date or epoch timestamp"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(body.len());
    for (r, rec) in body.iter().enumerate() {
        let row = r + 2;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: rec.len().min(header.len()) + 1,
                message: format!("expected {} cells, found {}", header.len(), rec.len()),
            });
        }
        let name = rec.get(0).unwrap_or_default().to_string();
        let values = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(c, cell)| parse_value(cell, row, c + 1))
            .collect::<Result<Vec<_>>>()?;
        out.push(clean(&name, &timestamps, &values, policy)?);
    }
    Ok(out)
}

fn read_long(
    header: &csv::StringRecord,
    body: &[csv::StringRecord],
    name: &str,
    policy: MissingPolicy,
) -> Result<Vec<TimeSeries>> {
    let ts_col = header
        .iter()
        .position(|h| h.eq_ignore_ascii_case("timestamp"));
    let val_col = header.iter().position(|h| h.eq_ignore_ascii_case("value"));
    let (Some(ts_col), Some(val_col)) = (ts_col, val_col) else {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "long layout needs a 'timestamp,value' header".into(),
        });
    };
    let mut timestamps = Vec::with_capacity(body.len());
    let mut values = Vec::with_capacity(body.len());
    for (r, rec) in body.iter().enumerate() {
        let row = r + 2;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let cell = rec.get(ts_col).unwrap_or_default();
        let t = parse_timestamp(cell).ok_or_else(|| Error::Parse {
            row,
            column: ts_col + 1,
            message: format!("'{cell}' is not an ISO date or epoch timestamp"),
        })?;
        timestamps.push(t);
        values.push(parse_value(
            rec.get(val_col).unwrap_or_default(),
            row,
            val_col + 1,
        )?);
    }
    Ok(vec![clean(name, &timestamps, &values, policy)?])
}

fn parse_value(cell: &str, row: usize, column: usize) -> Result<Option<f64>> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") || cell.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        row,
        column,
        message: format!("'{cell}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column,
            message: format!("'{cell}' is not finite"),
        });
    }
    Ok(Some(v))
}

/// Epoch seconds, RFC 3339, `YYYY-MM-DD[ T]HH:MM:SS` (UTC) or `YYYY-MM-DD`.
pub fn parse_timestamp(cell: &str) -> Option<i64> {
    let cell = cell.trim();
    if let Ok(t) = cell.parse::<i64>() {
        return Some(t);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(cell) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(cell, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(cell, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

fn clean(
    name: &str,
    timestamps: &[i64],
    values: &[Option<f64>],
    policy: MissingPolicy,
) -> Result<TimeSeries> {
    let first = values.iter().position(Option::is_some);
    let last = values.iter().rposition(Option::is_some);
    let (Some(first), Some(last)) = (first, last) else {
        return Err(Error::EmptySeries(name.to_string()));
    };
    let ts = &timestamps[first..=last];
    let vs = &values[first..=last];
    let (ts, vs) = match policy {
        MissingPolicy::DropLeading => vs
            .iter()
            .zip(ts)
            .filter_map(|(v, &t)| v.map(|v| (t, v)))
            .unzip(),
        MissingPolicy::Interpolate => (ts.to_vec(), interpolate(ts, vs)),
    };
    TimeSeries::new(name, ts, vs)
}

/// Fills interior gaps linearly in time. Ends must be present.
fn interpolate(timestamps: &[i64], values: &[Option<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev = 0;
    for i in 0..values.len() {
        match values[i] {
            Some(v) => {
                out.push(v);
                prev = i;
            }
            None => {
                let next = (i + 1..values.len())
                    .find(|&j| values[j].is_some())
                    .expect("trailing gaps are trimmed before interpolation");
                let (a, b) = (
                    values[prev].unwrap_or_default(),
                    values[next].unwrap_or_default(),
                );
                let (ta, tb) = (timestamps[prev], timestamps[next]);
                let frac = if tb == ta {
                    0.0
                } else {
                    (timestamps[i] - ta) as f64 / (tb - ta) as f64
                };
                out.push(a + (b - a) * frac);
            }
        }
    }
    out
}

/// Writes `timestamp,value` rows with epoch-second timestamps.
pub fn write_long_csv<W: std::io::Write>(mut w: W, ts: &TimeSeries) -> std::io::Result<()> {
    writeln!(w, "timestamp,value")?;
    for (t, v) in ts.timestamps().iter().zip(ts.values()) {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

/// Writes series sharing one timestamp grid as `series,<ISO-8601>,...`.
pub fn write_wide_csv<W: std::io::Write>(mut w: W, series: &[TimeSeries]) -> Result<()> {
    let Some(first) = series.first() else {
        return Err(Error::Shape("no series to write".into()));
    };
    let io = |e| Error::io("<wide csv>", e);
    let mut header = String::from("series");
    for &t in first.timestamps() {
        let dt = DateTime::<Utc>::from_timestamp(t, 0)
            .ok_or_else(|| Error::Shape(format!("timestamp {t} is out of range")))?;
        header.push(',');
        header.push_str(&dt.format("%Y-%m-%dT%H:%M:%SZ").to_string());
    }
    writeln!(w, "{header}").map_err(io)?;
    for s in series {
        if s.timestamps() != first.timestamps() {
            return Err(Error::Shape(format!(
                "series '{}' does not share the timestamp grid of '{}'",
                s.name(),
                first.name()
            )));
        }
        let mut line = s.name().to_string();
        for v in s.values() {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hourly(days: usize) -> TimeSeries {
        let n = days * 24;
        TimeSeries::new(
            "h",
            (0..n as i64)
                .map(|i| 1_600_000_000 / 3600 * 3600 + i * 3600)
                .collect(),
            (0..n).map(|i| i as f64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn long_file_parses() {
        let csv = "timestamp,value\n1600000000,1.0\n1600003600,2.0\n";
        let out = read_csv(
            csv.as_bytes(),
            "s",
            CsvLayout::Long,
            MissingPolicy::Interpolate,
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].len(), 2);
        assert_eq!(out[0].step(), 3600);
        assert_eq!(out[0].values(), &[1.0, 2.0]);
    }

    #[test]
    fn wide_row_interpolates_interior_gap() {
        let csv = "series,2020-01-01,2020-01-02,2020-01-03\nPageA, 5, , 7\n";
        let out = read_csv(
            csv.as_bytes(),
            "w",
            CsvLayout::Wide,
            MissingPolicy::Interpolate,
        )
        .unwrap();
        assert_eq!(out[0].name(), "PageA");
        assert_eq!(out[0].values(), &[5.0, 6.0, 7.0]);
        assert_eq!(out[0].step(), 86_400);
    }

    #[test]
    fn wide_row_trims_leading_and_trailing_gaps() {
        let csv = "series,2020-01-01,2020-01-02,2020-01-03,2020-01-04\nP,,1,2,\n";
        let out = read_csv(
            csv.as_bytes(),
            "w",
            CsvLayout::Wide,
            MissingPolicy::DropLeading,
        )
        .unwrap();
        assert_eq!(out[0].values(), &[1.0, 2.0]);
        assert_eq!(
            out[0].timestamps()[0],
            parse_timestamp("2020-01-02").unwrap()
        );
    }

    #[test]
    fn drop_policy_with_interior_gap_is_a_spacing_error() {
        let csv = "series,2020-01-01,2020-01-02,2020-01-03,2020-01-04\nP,1,,3,4\n";
        let err = read_csv(
            csv.as_bytes(),
            "w",
            CsvLayout::Wide,
            MissingPolicy::DropLeading,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Spacing { .. }), "{err}");
    }

    #[test]
    fn all_empty_row_is_empty_series() {
        let csv = "series,2020-01-01,2020-01-02\nPageB,,\n";
        let err = read_csv(
            csv.as_bytes(),
            "w",
            CsvLayout::Wide,
            MissingPolicy::Interpolate,
        )
        .unwrap_err();
        assert!(err
            .to_string()
            .contains("series 'PageB' empty after cleaning"));
    }

    #[test]
    fn malformed_cell_names_row_and_column() {
        let csv = "series,2020-01-01,2020-01-02\nP,1,abc\n";
        let err = read_csv(
            csv.as_bytes(),
            "w",
            CsvLayout::Wide,
            MissingPolicy::Interpolate,
        )
        .unwrap_err();
        match err {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (2, 3)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_uniform_long_file_is_rejected() {
        let csv = "timestamp,value\n0,1\n3600,2\n10800,3\n";
        let err = read_csv(
            csv.as_bytes(),
            "s",
            CsvLayout::Long,
            MissingPolicy::Interpolate,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Spacing { .. }));
    }

    #[test]
    fn iso_timestamps_in_long_layout() {
        let csv = "timestamp,value\n2020-09-08T00:00:00Z,1\n2020-09-08T01:00:00Z,2\n";
        let out = read_csv(
            csv.as_bytes(),
            "s",
            CsvLayout::Long,
            MissingPolicy::Interpolate,
        )
        .unwrap();
        assert_eq!(out[0].timestamps(), &[1_599_523_200, 1_599_526_800]);
    }

    #[test]
    fn epoch_zero_is_thursday_midnight() {
        let ts = TimeSeries::new("e", vec![0, 3600], vec![0.0, 0.0]).unwrap();
        let fm =
            extract_calendar_features(&ts, &[FeatureName::DayOfWeek, FeatureName::Hour]).unwrap();
        assert_eq!(fm.feature("dayofweek").unwrap().codes()[0], 3);
        assert_eq!(fm.feature("hour").unwrap().codes(), &[0, 1]);
    }

    #[test]
    fn september_eighth_2020() {
        let ts = TimeSeries::new("e", vec![1_599_523_200, 1_599_526_800], vec![0.0, 0.0]).unwrap();
        let fm = extract_calendar_features(
            &ts,
            &[
                FeatureName::Hour,
                FeatureName::DayOfMonth,
                FeatureName::Month,
                FeatureName::DayOfWeek,
            ],
        )
        .unwrap();
        assert_eq!(fm.feature("hour").unwrap().codes()[0], 0);
        assert_eq!(fm.feature("dayofmonth").unwrap().codes()[0], 7);
        assert_eq!(fm.feature("month").unwrap().codes()[0], 8);
        // A Tuesday on the civil calendar.
        assert_eq!(fm.feature("dayofweek").unwrap().codes()[0], 1);
    }

    #[test]
    fn two_step_time_index_spans_unit_interval() {
        let ts = TimeSeries::new("e", vec![100, 200], vec![0.0, 0.0]).unwrap();
        let fm = extract_calendar_features(&ts, &[FeatureName::Hour]).unwrap();
        assert_eq!(fm.time_index(), &[0.0, 1.0]);
    }

    #[test]
    fn unsupported_feature_name() {
        assert!(matches!(
            "weekofyear".parse::<FeatureName>(),
            Err(Error::Config(_))
        ));
        let ts = hourly(1);
        assert!(matches!(
            extract_calendar_features(&ts, &[]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn daily_split_thirty_three() {
        let ts = TimeSeries::new(
            "d",
            (0..33).map(|i| i * 86_400).collect(),
            (0..33).map(f64::from).collect(),
        )
        .unwrap();
        let fm = extract_calendar_features(&ts, &[FeatureName::DayOfWeek]).unwrap();
        let (train, test) = train_test_split(&ts, &fm, SplitSpec::default()).unwrap();
        assert_eq!((train.series.len(), test.series.len()), (30, 3));
        assert_eq!(train.features.len(), 30);
        assert_eq!(test.series.values(), &[30.0, 31.0, 32.0]);
    }

    #[test]
    fn hourly_split_thirty_three() {
        let ts = hourly(33);
        let fm = extract_calendar_features(&ts, &[FeatureName::Hour]).unwrap();
        let (train, test) = train_test_split(&ts, &fm, SplitSpec::default()).unwrap();
        assert_eq!((train.range.len(), test.range.len()), (720, 72));
        assert_eq!(train.range.end, test.range.start);
    }

    #[test]
    fn short_series_split_error() {
        let ts = hourly(10);
        let fm = extract_calendar_features(&ts, &[FeatureName::Hour]).unwrap();
        match train_test_split(&ts, &fm, SplitSpec::default()).unwrap_err() {
            Error::Split {
                required,
                available,
            } => assert_eq!((required, available), (792, 240)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn standardize_examples() {
        let (s, z) = standardize(&[2.0, 4.0]);
        assert_eq!((s.mean, s.std), (3.0, 1.0));
        assert_eq!(z, vec![-1.0, 1.0]);

        let (s, z) = standardize(&[5.0, 5.0, 5.0]);
        assert_eq!((s.mean, s.std), (5.0, 1.0));
        assert_eq!(z, vec![0.0, 0.0, 0.0]);

        let v = [1.5, -2.25, 1e3, 7.0];
        let (s, z) = standardize(&v);
        for (a, b) in s.inverse(&z).iter().zip(v) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn wide_writer_round_trips_through_reader() {
        let a = TimeSeries::new("a", vec![0, 3600, 7200], vec![1.0, 2.5, -3.0]).unwrap();
        let b = TimeSeries::new("b", vec![0, 3600, 7200], vec![0.1, 0.2, 0.3]).unwrap();
        let mut buf = Vec::new();
        write_wide_csv(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let back = read_csv(
            buf.as_slice(),
            "x",
            CsvLayout::Wide,
            MissingPolicy::Interpolate,
        )
        .unwrap();
        assert_eq!(back, vec![a, b]);
    }
}
