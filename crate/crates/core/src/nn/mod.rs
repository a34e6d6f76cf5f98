//! A small neural-network engine for categorical embedding models.
//!
//! Only what the boosted embedding stages need is here: lookup tables,
//! a dense ReLU head with one inverted-dropout layer, an optional
//! Time2Vec block, hand-written backprop for mean squared error, and
//! RMSProp. Tables can be frozen individually.

mod layers;
mod model;
mod optim;

use rand::Rng;

pub use layers::{Activation, DenseLayer, EmbeddingTable, Time2VecLayer};
pub use model::{
    mse, CompositeEmbeddingModel, ForwardCache, Gradients, Mode, ParamId, TrainConfig,
};
pub use optim::{rmsprop_step, RmsProp, RmsPropState};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Self { rows, cols, data })
    }

    /// Uniform in `[-limit, limit]` with the Glorot limit `sqrt(6 / (fan_in + fan_out))`.
    pub fn xavier_uniform<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// How to size an embedding from its category count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingSizeRule {
    /// `min(50, (c + 1) / 2)`
    #[default]
    Half,
    /// `round((c + 1)^0.25)`
    FourthRoot,
}

impl std::str::FromStr for EmbeddingSizeRule {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim() {
            "half" => Ok(Self::Half),
            "fourth_root" => Ok(Self::FourthRoot),
            other => Err(crate::Error::Config(format!(
                "unknown embedding size rule '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for EmbeddingSizeRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Half => "half",
            Self::FourthRoot => "fourth_root",
        })
    }
}

/// Embedding width for a feature with `cardinality` categories. Never 0.
pub fn embedding_size(cardinality: usize, rule: EmbeddingSizeRule) -> usize {
    let rows = cardinality + 1;
    let dim = match rule {
        EmbeddingSizeRule::Half => (rows / 2).min(50),
        EmbeddingSizeRule::FourthRoot => (rows as f64).powf(0.25).round_ties_even() as usize,
    };
    dim.max(1)
}
