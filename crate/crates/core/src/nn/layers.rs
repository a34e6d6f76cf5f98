use rand::Rng;

use super::Matrix;
use crate::error::{Error, Result};

/// Lookup table for one categorical feature.
///
/// Holds `cardinality + 1` rows; the extra row is addressable but never
/// produced by calendar features.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    feature: String,
    cardinality: usize,
    weights: Matrix,
    frozen: bool,
}

impl EmbeddingTable {
    pub fn new<R: Rng + ?Sized>(
        feature: impl Into<String>,
        cardinality: usize,
        dim: usize,
        rng: &mut R,
    ) -> Self {
        let rows = cardinality + 1;
        Self {
            feature: feature.into(),
            cardinality,
            weights: Matrix::xavier_uniform(rows, dim, rows, dim, rng),
            frozen: false,
        }
    }

    pub fn from_weights(
        feature: impl Into<String>,
        cardinality: usize,
        weights: Matrix,
        frozen: bool,
    ) -> Result<Self> {
        let feature = feature.into();
        if weights.rows() != cardinality + 1 || weights.cols() == 0 {
            return Err(Error::Shape(format!(
                "embedding '{feature}' needs {} rows and a nonzero width, got {}x{}",
                cardinality + 1,
                weights.rows(),
                weights.cols()
            )));
        }
        Ok(Self {
            feature,
            cardinality,
            weights,
            frozen,
        })
    }

    pub fn feature(&self) -> &str {
        &self.feature
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn rows(&self) -> usize {
        self.weights.rows()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub(crate) fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    pub fn lookup(&self, code: u32) -> Option<&[f64]> {
        ((code as usize) < self.rows()).then(|| self.weights.row(code as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub(crate) fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    pub(crate) fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

/// Fully connected layer, `weights` is out x in.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Glorot-uniform weights, zero bias.
    pub fn new<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Self {
            weights: Matrix::xavier_uniform(outputs, inputs, inputs, outputs, rng),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }
}

/// Learned time encoding: one linear component followed by `k - 1`
/// sinusoids of the time index.
#[derive(Debug, Clone, PartialEq)]
pub struct Time2VecLayer {
    pub omega: Vec<f64>,
    pub phi: Vec<f64>,
}

impl Time2VecLayer {
    pub fn new<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let k = k.max(1);
        let limit = (6.0 / (1 + k) as f64).sqrt();
        Self {
            omega: (0..k).map(|_| rng.gen_range(-limit..=limit)).collect(),
            phi: (0..k).map(|_| rng.gen_range(-limit..=limit)).collect(),
        }
    }

    pub fn from_parts(omega: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if omega.is_empty() || omega.len() != phi.len() {
            return Err(Error::Shape(format!(
                "time2vec needs equal nonzero omega/phi lengths, got {} and {}",
                omega.len(),
                phi.len()
            )));
        }
        Ok(Self { omega, phi })
    }

    pub fn width(&self) -> usize {
        self.omega.len()
    }

    /// `out[0] = omega[0]*tau + phi[0]`, `out[i] = sin(omega[i]*tau + phi[i])`.
    pub fn apply(&self, tau: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.width()];
        self.apply_into(tau, &mut out);
        out
    }

    pub(crate) fn apply_into(&self, tau: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let arg = self.omega[i] * tau + self.phi[i];
            *o = if i == 0 { arg } else { arg.sin() };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn time2vec_zero_parameters() {
        let t = Time2VecLayer::from_parts(vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(t.apply(2.5), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn time2vec_hand_values() {
        let t = Time2VecLayer::from_parts(vec![1.0, PI], vec![0.0, 0.0]).unwrap();
        let out = t.apply(1.0);
        assert_eq!(out[0], 1.0);
        assert!(out[1].abs() < 1e-15);
    }

    #[test]
    fn time2vec_origin() {
        let t = Time2VecLayer::from_parts(vec![3.0, 4.0, 5.0], vec![0.25, 0.5, 1.0]).unwrap();
        assert_eq!(t.apply(0.0), vec![0.25, 0.5f64.sin(), 1.0f64.sin()]);
    }

    #[test]
    fn extra_row_is_addressable() {
        let mut rng = rand::rngs::mock::StepRng::new(0, 1);
        let t = EmbeddingTable::new("dayofweek", 7, 4, &mut rng);
        assert_eq!(t.rows(), 8);
        assert!(t.lookup(7).is_some());
        assert!(t.lookup(8).is_none());
    }
}
