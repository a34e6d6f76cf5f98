//! Time-series forecasting with boosted categorical embeddings.
//!
//! A forecast is built in two halves. First a sequence of small neural
//! networks is trained, one categorical calendar feature at a time: each
//! stage adds a new embedding table next to the (frozen) tables of the
//! earlier stages and fits a fresh dense head on top. Then a gradient
//! boosted tree ensemble is fit to whatever the final network leaves
//! unexplained. The forecast is the sum of both parts.
//!
//! Modules:
//!
//! * [`series`]: ingestion, calendar features, splitting, scaling.
//! * [`nn`]: embedding tables, dense head, backprop, RMSProp.
//! * [`gbdt`]: least-squares boosted regression trees.
//! * [`boosting`]: generic boosting driver and the staged embedding fit.
//! * [`eval`]: SMAPE, baselines, backtests and report tables.
//! * [`cli`]: the `fit`, `forecast`, `benchmark` and `export-plot` commands.

pub mod boosting;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod format;
pub mod gbdt;
pub mod nn;
pub mod series;
pub mod synthetic;

pub use boosting::{deepgb_fit, deepgb_predict, gradient_boost, BoostConfig, DeepGbModel};
pub use error::{Error, Result};
pub use gbdt::{GbdtConfig, GbdtModel};
pub use series::{FeatureMatrix, FeatureName, SplitSpec, TimeSeries};
