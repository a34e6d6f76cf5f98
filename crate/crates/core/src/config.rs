//! Run configuration: a flat `key = value` file.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional and listed in [`KEYS`] with its default. Unknown or repeated
//! keys are errors. An environment variable `DEEPGB_<KEY>` (key upper-cased)
//! overrides the file value; other `DEEPGB_` variables are ignored.
//! Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::boosting::BoostConfig;
use crate::error::{Error, Result};
use crate::eval::{BaselineSpec, DeepGbSpec, ModelSpec};
use crate::gbdt::GbdtConfig;
use crate::nn::{EmbeddingSizeRule, RmsProp, TrainConfig};
use crate::series::{CsvLayout, FeatureName, MissingPolicy, SplitSpec, SECONDS_PER_DAY};

pub const ENV_PREFIX: &str = "DEEPGB_";

/// Width used when `time2vec = on`.
pub const DEFAULT_TIME2VEC_WIDTH: usize = 4;

/// `(key, default, description)` for every accepted key.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("data", "data.csv", "input CSV"),
    ("layout", "wide", "wide | long"),
    (
        "missing_policy",
        "interpolate",
        "interpolate | drop_leading",
    ),
    (
        "series",
        "",
        "series to fit and forecast; empty picks the first",
    ),
    (
        "features",
        "dayofweek,hour",
        "stage order, from dayofweek, hour, month, dayofmonth",
    ),
    ("embedding_rule", "half", "half | fourth_root"),
    (
        "epsilon",
        "0.001",
        "stop when the mean absolute residual change falls below this",
    ),
    ("max_stages", "all", "cap on embedding stages, or all"),
    ("epochs", "100", "epochs per stage"),
    ("batch_size", "32", "mini-batch size"),
    ("learning_rate", "0.0002", "RMSProp step size"),
    ("rms_decay", "0.9", "RMSProp decay"),
    ("rms_epsilon", "0.00000001", "RMSProp denominator offset"),
    ("dropout", "0.1", "dropout after the first hidden layer"),
    ("hidden_sizes", "32,32,32,32", "dense ReLU head widths"),
    ("time2vec", "off", "off | on | width"),
    (
        "window_size",
        "1",
        "input window; only the last step feeds the embeddings",
    ),
    ("n_trees", "800", "residual trees"),
    ("max_depth", "3", "residual tree depth"),
    ("gbdt_learning_rate", "0.1", "residual tree shrinkage"),
    ("min_samples_leaf", "1", "smallest residual tree leaf"),
    ("train_days", "30", "training window in days"),
    ("test_days", "3", "backtest horizon in days"),
    ("horizon", "72", "forecast steps"),
    (
        "seed",
        "0",
        "seed for initialization, shuffling and dropout",
    ),
    ("out_dir", "out", "output directory"),
    (
        "seasonal_period",
        "auto",
        "seasonal naive period in steps; auto = one day (7 for daily data)",
    ),
    (
        "ar_order",
        "auto",
        "linear AR order; auto as for seasonal_period",
    ),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub layout: CsvLayout,
    pub missing_policy: MissingPolicy,
    pub series: Option<String>,
    pub features: Vec<FeatureName>,
    pub embedding_rule: EmbeddingSizeRule,
    pub epsilon: f64,
    pub max_stages: Option<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
    pub dropout: f64,
    pub hidden_sizes: Vec<usize>,
    pub time2vec: Option<usize>,
    pub window_size: usize,
    pub n_trees: usize,
    pub max_depth: usize,
    pub gbdt_learning_rate: f64,
    pub min_samples_leaf: usize,
    pub train_days: usize,
    pub test_days: usize,
    pub horizon: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub seasonal_period: Option<usize>,
    pub ar_order: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut cfg = RunConfig {
            data: PathBuf::new(),
            layout: CsvLayout::Wide,
            missing_policy: MissingPolicy::Interpolate,
            series: None,
            features: Vec::new(),
            embedding_rule: EmbeddingSizeRule::Half,
            epsilon: 0.0,
            max_stages: None,
            epochs: 0,
            batch_size: 0,
            learning_rate: 0.0,
            rms_decay: 0.0,
            rms_epsilon: 0.0,
            dropout: 0.0,
            hidden_sizes: Vec::new(),
            time2vec: None,
            window_size: 0,
            n_trees: 0,
            max_depth: 0,
            gbdt_learning_rate: 0.0,
            min_samples_leaf: 0,
            train_days: 0,
            test_days: 0,
            horizon: 0,
            seed: 0,
            out_dir: PathBuf::new(),
            seasonal_period: None,
            ar_order: None,
        };
        for (key, default, _) in KEYS {
            cfg.set(key, default).expect("built-in defaults parse");
        }
        cfg
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = '{value}': {e}")))
}

fn parse_auto(key: &str, value: &str, auto: &str) -> Result<Option<usize>> {
    if value == auto {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn auto_or(v: Option<usize>, auto: &str) -> String {
    v.map_or_else(|| auto.to_string(), |v| v.to_string())
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "data" => self.data = PathBuf::from(v),
            "layout" => self.layout = parse(key, v)?,
            "missing_policy" => self.missing_policy = parse(key, v)?,
            "series" => self.series = (!v.is_empty()).then(|| v.to_string()),
            "features" => self.features = parse_list(key, v)?,
            "embedding_rule" => self.embedding_rule = parse(key, v)?,
            "epsilon" => self.epsilon = parse(key, v)?,
            "max_stages" => self.max_stages = parse_auto(key, v, "all")?,
            "epochs" => self.epochs = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "learning_rate" => self.learning_rate = parse(key, v)?,
            "rms_decay" => self.rms_decay = parse(key, v)?,
            "rms_epsilon" => self.rms_epsilon = parse(key, v)?,
            "dropout" => self.dropout = parse(key, v)?,
            "hidden_sizes" => self.hidden_sizes = parse_list(key, v)?,
            "time2vec" => {
                self.time2vec = match v {
                    "off" => None,
                    "on" => Some(DEFAULT_TIME2VEC_WIDTH),
                    _ => Some(parse(key, v)?),
                }
            }
            "window_size" => self.window_size = parse(key, v)?,
            "n_trees" => self.n_trees = parse(key, v)?,
            "max_depth" => self.max_depth = parse(key, v)?,
            "gbdt_learning_rate" => self.gbdt_learning_rate = parse(key, v)?,
            "min_samples_leaf" => self.min_samples_leaf = parse(key, v)?,
            "train_days" => self.train_days = parse(key, v)?,
            "test_days" => self.test_days = parse(key, v)?,
            "horizon" => self.horizon = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "seasonal_period" => self.seasonal_period = parse_auto(key, v, "auto")?,
            "ar_order" => self.ar_order = parse_auto(key, v, "auto")?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Current value of `key` in the file syntax.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "data" => self.data.display().to_string(),
            "layout" => self.layout.to_string(),
            "missing_policy" => self.missing_policy.to_string(),
            "series" => self.series.clone().unwrap_or_default(),
            "features" => join(&self.features),
            "embedding_rule" => self.embedding_rule.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "max_stages" => auto_or(self.max_stages, "all"),
            "epochs" => self.epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "rms_decay" => self.rms_decay.to_string(),
            "rms_epsilon" => self.rms_epsilon.to_string(),
            "dropout" => self.dropout.to_string(),
            "hidden_sizes" => join(&self.hidden_sizes),
            "time2vec" => auto_or(self.time2vec, "off"),
            "window_size" => self.window_size.to_string(),
            "n_trees" => self.n_trees.to_string(),
            "max_depth" => self.max_depth.to_string(),
            "gbdt_learning_rate" => self.gbdt_learning_rate.to_string(),
            "min_samples_leaf" => self.min_samples_leaf.to_string(),
            "train_days" => self.train_days.to_string(),
            "test_days" => self.test_days.to_string(),
            "horizon" => self.horizon.to_string(),
            "seed" => self.seed.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "seasonal_period" => auto_or(self.seasonal_period, "auto"),
            "ar_order" => auto_or(self.ar_order, "auto"),
            _ => return None,
        })
    }

    /// Parses config text, then applies overrides from `env`.
    pub fn parse_with_env(text: &str, env: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!(
                    "line {}: key '{key}' repeated",
                    i + 1
                )));
            }
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip(e))))?;
        }
        for (key, _, _) in KEYS {
            let var = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
            if let Some(value) = env(&var) {
                cfg.set(key, &value)
                    .map_err(|e| Error::Config(format!("{var}: {}", strip(e))))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file with process-environment overrides and resolves
    /// relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse_with_env(&text, |k| std::env::var(k).ok())?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if self.data.is_relative() {
            self.data = base.join(&self.data);
        }
        if self.out_dir.is_relative() {
            self.out_dir = base.join(&self.out_dir);
        }
    }

    /// Every key with its effective value; parses back to an equal config.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (key, _, doc) in KEYS {
            out.push_str(&format!(
                "# {doc}\n{key} = {}\n",
                self.get(key).expect("listed key")
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Config(
                "features must name at least one feature".into(),
            ));
        }
        for (i, f) in self.features.iter().enumerate() {
            if self.features[..i].contains(f) {
                return Err(Error::Config(format!("feature '{f}' listed twice")));
            }
        }
        if self.window_size == 0 {
            return Err(Error::Config("window_size must be at least 1".into()));
        }
        if self.seasonal_period == Some(0) || self.ar_order == Some(0) {
            return Err(Error::Config(
                "seasonal_period and ar_order must be at least 1".into(),
            ));
        }
        self.boost_config().validate(self.features.len())?;
        self.boost_config().train.validate()?;
        self.gbdt_config().validate()?;
        self.split().validate()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            dropout_rate: self.dropout,
            hidden_sizes: self.hidden_sizes.clone(),
            optimizer: RmsProp {
                learning_rate: self.learning_rate,
                decay: self.rms_decay,
                epsilon: self.rms_epsilon,
            },
            time2vec: self.time2vec,
        }
    }

    pub fn boost_config(&self) -> BoostConfig {
        BoostConfig {
            epsilon: self.epsilon,
            max_stages: self.max_stages,
            embedding_rule: self.embedding_rule,
            train: self.train_config(),
            ..BoostConfig::default()
        }
    }

    pub fn gbdt_config(&self) -> GbdtConfig {
        GbdtConfig {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            learning_rate: self.gbdt_learning_rate,
            min_samples_leaf: self.min_samples_leaf,
        }
    }

    pub fn split(&self) -> SplitSpec {
        SplitSpec {
            train_days: self.train_days,
            test_days: self.test_days,
        }
    }

    /// DeepGB plus both baselines. `step` sizes the automatic period.
    pub fn benchmark_models(&self, step: i64) -> Vec<ModelSpec> {
        let auto = if step >= SECONDS_PER_DAY {
            7
        } else {
            (SECONDS_PER_DAY / step.max(1)).max(1) as usize
        };
        vec![
            ModelSpec::DeepGb(Box::new(DeepGbSpec {
                features: self.features.clone(),
                boost: self.boost_config(),
                gbdt: self.gbdt_config(),
            })),
            ModelSpec::Baseline(BaselineSpec::SeasonalNaive {
                period: self.seasonal_period.unwrap_or(auto),
            }),
            ModelSpec::Baseline(BaselineSpec::LinearAr {
                order: self.ar_order.unwrap_or(auto),
            }),
        ]
    }
}

/// Drops the "configuration error: " prefix when re-wrapping.
fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = RunConfig::parse_with_env("", no_env).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(
            cfg.features,
            vec![FeatureName::DayOfWeek, FeatureName::Hour]
        );
        assert_eq!(cfg.boost_config(), BoostConfig::default());
        assert_eq!(cfg.gbdt_config(), GbdtConfig::default());
        assert_eq!(cfg.split(), SplitSpec::default());
    }

    #[test]
    fn every_key_has_a_getter() {
        let cfg = RunConfig::default();
        for (key, default, _) in KEYS {
            assert_eq!(cfg.get(key).as_deref(), Some(*default), "{key}");
        }
    }

    #[test]
    fn unknown_and_repeated_keys_rejected() {
        let err = RunConfig::parse_with_env("colour = red\n", no_env).unwrap_err();
        assert!(err.to_string().contains("unknown key 'colour'"));
        let err = RunConfig::parse_with_env("seed = 1\nseed = 2\n", no_env).unwrap_err();
        assert!(err.to_string().contains("repeated"));
        let err = RunConfig::parse_with_env("seed\n", no_env).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn bad_values_name_the_key() {
        let err = RunConfig::parse_with_env("epochs = many\n", no_env).unwrap_err();
        assert!(err.to_string().contains("epochs"));
        let err = RunConfig::parse_with_env("features = dayofweek,week\n", no_env).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = RunConfig::parse_with_env("features = hour,hour\n", no_env).unwrap_err();
        assert!(err.to_string().contains("twice"));
        assert!(RunConfig::parse_with_env("max_stages = 3\n", no_env).is_err());
    }

    #[test]
    fn environment_overrides_file() {
        let env = |k: &str| match k {
            "DEEPGB_SEED" => Some("42".to_string()),
            "DEEPGB_UNRELATED" => Some("x".to_string()),
            _ => None,
        };
        let cfg = RunConfig::parse_with_env("seed = 3\nepochs = 5\n", env).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.epochs, 5);
        let bad = |k: &str| (k == "DEEPGB_EPOCHS").then(|| "x".to_string());
        let err = RunConfig::parse_with_env("", bad).unwrap_err();
        assert!(err.to_string().contains("DEEPGB_EPOCHS"));
    }

    #[test]
    fn effective_config_round_trips() {
        let text = "features = hour, dayofweek, month\nlearning_rate = 0.00037\ntime2vec = on\n\
                    max_stages = 2\nseries = page_a\nhidden_sizes = 8,4\nar_order = 5\n";
        let cfg = RunConfig::parse_with_env(text, no_env).unwrap();
        assert_eq!(cfg.time2vec, Some(DEFAULT_TIME2VEC_WIDTH));
        let again = RunConfig::parse_with_env(&cfg.to_config_string(), no_env).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn relative_paths_resolve_against_base() {
        let mut cfg = RunConfig {
            out_dir: PathBuf::from("/abs/out"),
            ..RunConfig::default()
        };
        cfg.resolve_paths(Path::new("conf"));
        assert_eq!(cfg.data, Path::new("conf/data.csv"));
        assert_eq!(cfg.out_dir, Path::new("/abs/out"));
    }

    #[test]
    fn automatic_baseline_periods() {
        let cfg = RunConfig::default();
        let hourly = cfg.benchmark_models(3600);
        assert_eq!(
            hourly[1],
            ModelSpec::Baseline(BaselineSpec::SeasonalNaive { period: 24 })
        );
        assert_eq!(
            hourly[2],
            ModelSpec::Baseline(BaselineSpec::LinearAr { order: 24 })
        );
        let daily = cfg.benchmark_models(86_400);
        assert_eq!(
            daily[1],
            ModelSpec::Baseline(BaselineSpec::SeasonalNaive { period: 7 })
        );
    }
}
