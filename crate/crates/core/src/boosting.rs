//! Boosting drivers.
//!
//! [`gradient_boost`] is the generic loop: every learner in turn fits the
//! current residual, its prediction (scaled by `rho`) is subtracted, and
//! the loop ends once the residual stops moving.
//!
//! [`deepgb_fit`] specializes it to embedding models. Stage `m` trains a
//! network holding the frozen tables of stages `1..m` plus one new table,
//! on the standardized target. Because that network already contains the
//! earlier tables, the stage residual is `y - model_m(x)`. After the last
//! stage a tree ensemble is fit to the remaining residual.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gbdt::{GbdtConfig, GbdtModel};
use crate::nn::{
    embedding_size, CompositeEmbeddingModel, EmbeddingSizeRule, EmbeddingTable, TrainConfig,
};
use crate::series::{
    calendar_features_at, standardize, FeatureMatrix, FeatureName, Scaler, TimeScale, TimeSeries,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    /// Stop once the mean absolute change of the residual drops below this.
    pub epsilon: f64,
    /// Upper bound on stages; `None` uses every feature (or model).
    pub max_stages: Option<usize>,
    pub rho: f64,
    pub embedding_rule: EmbeddingSizeRule,
    pub train: TrainConfig,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_stages: None,
            rho: 1.0,
            embedding_rule: EmbeddingSizeRule::Half,
            train: TrainConfig::default(),
        }
    }
}

impl BoostConfig {
    /// Checks the settings against `available` candidate stages.
    pub fn validate(&self, available: usize) -> Result<usize> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.rho.is_nan() || self.rho <= 0.0 {
            return Err(Error::Config(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if available == 0 {
            return Err(Error::Config(
                "nothing to boost: the model/feature list is empty".into(),
            ));
        }
        match self.max_stages {
            None => Ok(available),
            Some(m) if (1..=available).contains(&m) => Ok(m),
            Some(m) => Err(Error::Config(format!(
                "max_stages {m} outside 1..={available}"
            ))),
        }
    }
}

/// Why a boosting loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Mean |F_m - F_{m-1}| fell below epsilon.
    DeltaBelowEpsilon,
    /// Mean |F_m| fell below epsilon: nothing is left to learn.
    ResidualBelowEpsilon,
    /// Every stage ran.
    StagesExhausted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::DeltaBelowEpsilon => "delta_below_epsilon",
            StopReason::ResidualBelowEpsilon => "residual_below_epsilon",
            StopReason::StagesExhausted => "stages_exhausted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Self::DeltaBelowEpsilon,
            Self::ResidualBelowEpsilon,
            Self::StagesExhausted,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
    }
}

/// A model usable as one stage of [`gradient_boost`].
pub trait Learner<X: ?Sized> {
    fn fit(&mut self, x: &X, target: &[f64]) -> Result<()>;
    fn predict(&self, x: &X) -> Result<Vec<f64>>;
}

/// Output of [`gradient_boost`].
#[derive(Debug, Clone)]
pub struct BoostedEnsemble<M> {
    /// Members kept, in stage order.
    pub models: Vec<M>,
    pub rho: f64,
    /// `F_0 = y, F_1, ...` for every stage that ran.
    pub residuals: Vec<Vec<f64>>,
    /// Mean |F_m - F_{m-1}| per stage that ran.
    pub deltas: Vec<f64>,
    pub stop: StopReason,
}

impl<M> BoostedEnsemble<M> {
    /// `rho * sum(member predictions)`.
    pub fn predict<X: ?Sized>(&self, x: &X) -> Result<Vec<f64>>
    where
        M: Learner<X>,
    {
        let mut out: Option<Vec<f64>> = None;
        for m in &self.models {
            let p = m.predict(x)?;
            match out.as_mut() {
                None => out = Some(p.into_iter().map(|v| self.rho * v).collect()),
                Some(acc) => acc.iter_mut().zip(p).for_each(|(a, v)| *a += self.rho * v),
            }
        }
        out.ok_or_else(|| Error::Fit("ensemble has no members".into()))
    }
}

pub(crate) fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len().max(1) as f64
}

fn mean_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum::<f64>() / a.len().max(1) as f64
}

/// Generic gradient boosting over an ordered list of learners.
///
/// Stage `m` fits `F_{m-1}` and sets `F_m = F_{m-1} - rho * predict(x)`.
/// If the mean absolute change is below `epsilon` the loop stops and that
/// learner is discarded; otherwise it joins the ensemble.
pub fn gradient_boost<X: ?Sized, M: Learner<X>>(
    x: &X,
    y: &[f64],
    models: Vec<M>,
    config: &BoostConfig,
) -> Result<BoostedEnsemble<M>> {
    let stages = config.validate(models.len())?;
    let mut residuals = vec![y.to_vec()];
    let mut kept = Vec::new();
    let mut deltas = Vec::new();
    let mut stop = StopReason::StagesExhausted;
    for mut model in models.into_iter().take(stages) {
        let prev = residuals.last().expect("F_0 is always present");
        model.fit(x, prev)?;
        let pred = model.predict(x)?;
        if pred.len() != prev.len() {
            return Err(Error::Shape(format!(
                "learner returned {} predictions for {} rows",
                pred.len(),
                prev.len()
            )));
        }
        let next: Vec<f64> = prev
            .iter()
            .zip(&pred)
            .map(|(f, p)| f - config.rho * p)
            .collect();
        let delta = mean_abs_diff(&next, prev);
        residuals.push(next);
        deltas.push(delta);
        if delta < config.epsilon {
            stop = StopReason::DeltaBelowEpsilon;
            break;
        }
        kept.push(model);
    }
    Ok(BoostedEnsemble {
        models: kept,
        rho: config.rho,
        residuals,
        deltas,
        stop,
    })
}

/// One embedding stage of [`deepgb_fit`]. Sequences are on the
/// standardized scale over the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    /// 1-based stage number.
    pub stage: usize,
    pub feature: String,
    /// `model_m(x)` on the training rows.
    pub prediction: Vec<f64>,
    /// `F_m = y - model_m(x)`.
    pub residual: Vec<f64>,
    /// Mean |F_m - F_{m-1}|.
    pub delta: f64,
    pub loss_history: Vec<f64>,
    /// The stage network, kept for decomposition plots only.
    pub model: CompositeEmbeddingModel,
}

impl StageRecord {
    pub fn residual_mean_abs(&self) -> f64 {
        mean_abs(&self.residual)
    }
}

/// Name and cardinality of one input feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub cardinality: usize,
}

/// Final embedding network plus the residual tree ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepGbModel {
    pub composite: CompositeEmbeddingModel,
    pub residual_model: GbdtModel,
    pub scaler: Scaler,
    pub stages: Vec<StageRecord>,
    /// All input features in training order; the trees see every one.
    pub features: Vec<FeatureSpec>,
    pub time_scale: TimeScale,
    pub stop: StopReason,
}

impl DeepGbModel {
    /// Checks that `fm` carries every training feature with the same cardinality.
    pub fn check_features(&self, fm: &FeatureMatrix) -> Result<()> {
        for spec in &self.features {
            let f = fm.feature(&spec.name).ok_or_else(|| {
                Error::Shape(format!("feature '{}' missing from input", spec.name))
            })?;
            if f.cardinality() != spec.cardinality {
                return Err(Error::Shape(format!(
                    "feature '{}' has cardinality {} but the model was trained with {}",
                    spec.name,
                    f.cardinality(),
                    spec.cardinality
                )));
            }
        }
        Ok(())
    }

    fn columns<'a>(&self, fm: &'a FeatureMatrix) -> Result<Vec<&'a [u32]>> {
        self.check_features(fm)?;
        Ok(self
            .features
            .iter()
            .map(|s| fm.feature(&s.name).expect("checked above").codes())
            .collect())
    }

    /// Standardized-scale outputs of the network and of the trees.
    pub fn predict_components(&self, fm: &FeatureMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let columns = self.columns(fm)?;
        let composite = self.composite.predict(fm)?;
        let residual = self.residual_model.predict(&columns)?;
        Ok((composite, residual))
    }

    /// Calendar features for `timestamps` using the training feature list
    /// and time scale.
    pub fn features_for(&self, timestamps: &[i64]) -> Result<FeatureMatrix> {
        let names = self
            .features
            .iter()
            .map(|s| s.name.parse::<FeatureName>())
            .collect::<Result<Vec<_>>>()?;
        calendar_features_at(timestamps, &names, self.time_scale)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|s| s.name.clone()).collect()
    }
}

fn stage_seed(seed: u64, stage: usize) -> u64 {
    seed ^ (stage as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Staged embedding training followed by a residual tree ensemble.
///
/// Features are consumed in the order they appear in `fm`.
pub fn deepgb_fit(
    ts: &TimeSeries,
    fm: &FeatureMatrix,
    config: &BoostConfig,
    residual_spec: &GbdtConfig,
) -> Result<DeepGbModel> {
    if fm.len() != ts.len() {
        return Err(Error::Shape(format!(
            "feature matrix has {} rows, series has {}",
            fm.len(),
            ts.len()
        )));
    }
    let stages = config.validate(fm.features().len())?;
    config.train.validate()?;
    residual_spec.validate()?;

    let (scaler, y) = standardize(ts.values());
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.train.seed);
    let mut frozen: Vec<EmbeddingTable> = Vec::new();
    let mut previous = y.clone();
    let mut records: Vec<StageRecord> = Vec::with_capacity(stages);
    let mut stop = StopReason::StagesExhausted;

    for (m, feature) in fm.features().iter().take(stages).enumerate() {
        let dim = embedding_size(feature.cardinality(), config.embedding_rule);
        let mut tables = frozen.clone();
        tables.push(EmbeddingTable::new(
            feature.name(),
            feature.cardinality(),
            dim,
            &mut init_rng,
        ));
        let mut model = CompositeEmbeddingModel::new(
            tables,
            &config.train.hidden_sizes,
            config.train.dropout_rate,
            config.train.time2vec,
            &mut init_rng,
        )?;
        let train = TrainConfig {
            seed: stage_seed(config.train.seed, m),
            ..config.train.clone()
        };
        let loss_history = model.fit(fm, &y, &train)?;
        model.freeze_embedding(m)?;

        let prediction = model.predict(fm)?;
        let residual: Vec<f64> = y.iter().zip(&prediction).map(|(t, p)| t - p).collect();
        let delta = mean_abs_diff(&residual, &previous);
        frozen = model.embeddings().to_vec();
        records.push(StageRecord {
            stage: m + 1,
            feature: feature.name().to_string(),
            prediction,
            residual: residual.clone(),
            delta,
            loss_history,
            model,
        });
        if delta < config.epsilon {
            stop = StopReason::DeltaBelowEpsilon;
            break;
        }
        if mean_abs(&residual) < config.epsilon {
            stop = StopReason::ResidualBelowEpsilon;
            break;
        }
        previous = residual;
    }

    let last = records.last().expect("at least one stage runs");
    let composite = last.model.clone();
    let residual_model = GbdtModel::fit(&fm.code_columns(), &last.residual, residual_spec)?;
    let features = fm
        .features()
        .iter()
        .map(|f| FeatureSpec {
            name: f.name().to_string(),
            cardinality: f.cardinality(),
        })
        .collect();
    Ok(DeepGbModel {
        composite,
        residual_model,
        scaler,
        stages: records,
        features,
        time_scale: fm.time_scale(),
        stop,
    })
}

/// Forecast on the original scale: network plus trees, de-standardized.
pub fn deepgb_predict(model: &DeepGbModel, fm: &FeatureMatrix) -> Result<Vec<f64>> {
    let (composite, residual) = model.predict_components(fm)?;
    Ok(composite
        .iter()
        .zip(&residual)
        .map(|(c, r)| model.scaler.inverse_one(c + r))
        .collect())
}
