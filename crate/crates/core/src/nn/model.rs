use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{Activation, DenseLayer, EmbeddingTable, Time2VecLayer};
use super::optim::{RmsProp, RmsPropState};
use super::Matrix;
use crate::error::{Error, Result};
use crate::series::FeatureMatrix;

/// Mini-batch training settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub dropout_rate: f64,
    pub hidden_sizes: Vec<usize>,
    pub optimizer: RmsProp,
    /// Width of the Time2Vec block; `None` disables it.
    pub time2vec: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            seed: 0,
            dropout_rate: 0.1,
            hidden_sizes: vec![32; 4],
            optimizer: RmsProp::default(),
            time2vec: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "epochs and batch_size must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        let opt = &self.optimizer;
        if !(opt.learning_rate > 0.0 && (0.0..1.0).contains(&opt.decay) && opt.epsilon > 0.0) {
            return Err(Error::Config(format!("invalid RMSProp settings {opt:?}")));
        }
        if self.time2vec == Some(0) {
            return Err(Error::Config("time2vec width must be at least 1".into()));
        }
        Ok(())
    }
}

/// Identifies one parameter block of a [`CompositeEmbeddingModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamId {
    Embedding(usize),
    Weights(usize),
    Bias(usize),
    Omega,
    Phi,
}

pub enum Mode<'a> {
    /// Draws an inverted-dropout mask from the given generator.
    Train(&'a mut dyn RngCore),
    Infer,
}

/// Activations kept from a forward pass for [`CompositeEmbeddingModel::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    codes: Vec<Vec<u32>>,
    taus: Vec<f64>,
    layer_inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
    dropout_mask: Option<Vec<f64>>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.batch
    }
}

/// Gradients of the loss for every trainable block. Frozen tables have none.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embeddings: Vec<Option<Matrix>>,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub omega: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        match id {
            ParamId::Embedding(i) => self.embeddings.get(i)?.as_ref().map(Matrix::as_slice),
            ParamId::Weights(l) => self.weights.get(l).map(Matrix::as_slice),
            ParamId::Bias(l) => self.biases.get(l).map(Vec::as_slice),
            ParamId::Omega => self.omega.as_deref(),
            ParamId::Phi => self.phi.as_deref(),
        }
    }
}

/// Mean squared error and its gradient with respect to the predictions.
pub fn mse(predictions: &[f64], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = predictions.len().max(1) as f64;
    let mut loss = 0.0;
    let grad = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    (loss / n, grad)
}

/// Embedding lookups for each categorical feature, concatenated (with an
/// optional Time2Vec block) and fed through a dense ReLU head ending in a
/// single linear unit.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeEmbeddingModel {
    embeddings: Vec<EmbeddingTable>,
    head: Vec<DenseLayer>,
    dropout_rate: f64,
    time2vec: Option<Time2VecLayer>,
}

impl CompositeEmbeddingModel {
    /// Fresh head of `hidden_sizes` ReLU layers plus `Dense(1)` on top of
    /// the given tables.
    pub fn new<R: Rng + ?Sized>(
        embeddings: Vec<EmbeddingTable>,
        hidden_sizes: &[usize],
        dropout_rate: f64,
        time2vec: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        let time2vec = time2vec.map(|k| Time2VecLayer::new(k, rng));
        let mut width = embeddings.iter().map(EmbeddingTable::dim).sum::<usize>()
            + time2vec.as_ref().map_or(0, Time2VecLayer::width);
        let mut head = Vec::with_capacity(hidden_sizes.len() + 1);
        for &h in hidden_sizes {
            head.push(DenseLayer::new(width, h, Activation::Relu, rng));
            width = h;
        }
        head.push(DenseLayer::new(width, 1, Activation::Identity, rng));
        Self::from_parts(embeddings, head, dropout_rate, time2vec)
    }

    pub fn from_parts(
        embeddings: Vec<EmbeddingTable>,
        head: Vec<DenseLayer>,
        dropout_rate: f64,
        time2vec: Option<Time2VecLayer>,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {dropout_rate} outside [0, 1)"
            )));
        }
        let mut width = embeddings.iter().map(EmbeddingTable::dim).sum::<usize>()
            + time2vec.as_ref().map_or(0, Time2VecLayer::width);
        if width == 0 {
            return Err(Error::Shape("model has no inputs".into()));
        }
        let Some(last) = head.last() else {
            return Err(Error::Shape("head has no layers".into()));
        };
        if last.outputs() != 1 {
            return Err(Error::Shape(format!(
                "final layer must have one output, has {}",
                last.outputs()
            )));
        }
        for (l, layer) in head.iter().enumerate() {
            if layer.inputs() != width || layer.bias.len() != layer.outputs() {
                return Err(Error::Shape(format!(
                    "layer {l} is {}x{} with {} biases but receives width {width}",
                    layer.outputs(),
                    layer.inputs(),
                    layer.bias.len()
                )));
            }
            width = layer.outputs();
        }
        Ok(Self {
            embeddings,
            head,
            dropout_rate,
            time2vec,
        })
    }

    pub fn embeddings(&self) -> &[EmbeddingTable] {
        &self.embeddings
    }

    pub fn head(&self) -> &[DenseLayer] {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.head
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn time2vec(&self) -> Option<&Time2VecLayer> {
        self.time2vec.as_ref()
    }

    /// Width of the concatenated embedding (and Time2Vec) vector.
    pub fn input_width(&self) -> usize {
        self.head[0].inputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.param_ids()
            .into_iter()
            .map(|id| self.param(id).len())
            .sum()
    }

    /// Marks table `index` frozen; freezing twice is a no-op.
    pub fn freeze_embedding(&mut self, index: usize) -> Result<()> {
        let n = self.embeddings.len();
        let table = self.embeddings.get_mut(index).ok_or_else(|| {
            Error::Config(format!("embedding index {index} out of range ({n} tables)"))
        })?;
        table.set_frozen(true);
        Ok(())
    }

    /// Every parameter block in a fixed order, frozen tables included.
    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = (0..self.embeddings.len()).map(ParamId::Embedding).collect();
        for l in 0..self.head.len() {
            ids.push(ParamId::Weights(l));
            ids.push(ParamId::Bias(l));
        }
        if self.time2vec.is_some() {
            ids.push(ParamId::Omega);
            ids.push(ParamId::Phi);
        }
        ids
    }

    pub fn param(&self, id: ParamId) -> &[f64] {
        match id {
            ParamId::Embedding(i) => self.embeddings[i].weights().as_slice(),
            ParamId::Weights(l) => self.head[l].weights.as_slice(),
            ParamId::Bias(l) => &self.head[l].bias,
            ParamId::Omega => &self.time2vec.as_ref().expect("time2vec enabled").omega,
            ParamId::Phi => &self.time2vec.as_ref().expect("time2vec enabled").phi,
        }
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut [f64] {
        match id {
            ParamId::Embedding(i) => self.embeddings[i].weights_mut().as_mut_slice(),
            ParamId::Weights(l) => self.head[l].weights.as_mut_slice(),
            ParamId::Bias(l) => &mut self.head[l].bias,
            ParamId::Omega => &mut self.time2vec.as_mut().expect("time2vec enabled").omega,
            ParamId::Phi => &mut self.time2vec.as_mut().expect("time2vec enabled").phi,
        }
    }

    /// Code column feeding each table.
    fn resolve<'a>(&self, fm: &'a FeatureMatrix) -> Result<Vec<&'a [u32]>> {
        self.embeddings
            .iter()
            .map(|table| {
                fm.feature(table.feature())
                    .map(|f| f.codes())
                    .ok_or_else(|| {
                        Error::Shape(format!("feature '{}' missing from input", table.feature()))
                    })
            })
            .collect()
    }

    /// Forward pass over the given rows of `fm`.
    pub fn forward(
        &self,
        fm: &FeatureMatrix,
        rows: &[usize],
        mode: Mode<'_>,
    ) -> Result<(Vec<f64>, ForwardCache)> {
        let columns = self.resolve(fm)?;
        let batch = rows.len();
        let width = self.input_width();
        let mut input = vec![0.0; batch * width];
        let mut codes = vec![Vec::with_capacity(batch); self.embeddings.len()];
        let mut taus = Vec::new();
        for (r, &row) in rows.iter().enumerate() {
            if row >= fm.len() {
                return Err(Error::Shape(format!(
                    "row {row} beyond {} input rows",
                    fm.len()
                )));
            }
            let dst = &mut input[r * width..(r + 1) * width];
            let mut offset = 0;
            for (t, table) in self.embeddings.iter().enumerate() {
                let code = columns[t][row];
                let v = table.lookup(code).ok_or_else(|| Error::Lookup {
                    feature: table.feature().to_string(),
                    row,
                    code,
                    rows: table.rows(),
                })?;
                dst[offset..offset + v.len()].copy_from_slice(v);
                offset += v.len();
                codes[t].push(code);
            }
            if let Some(t2v) = &self.time2vec {
                let tau = fm.time_index()[row];
                t2v.apply_into(tau, &mut dst[offset..]);
                taus.push(tau);
            }
        }

        let mut rng = match mode {
            Mode::Train(rng) => Some(rng),
            Mode::Infer => None,
        };
        let mut layer_inputs = Vec::with_capacity(self.head.len());
        let mut pre_activations = Vec::with_capacity(self.head.len());
        let mut dropout_mask = None;
        let mut x = input;
        for (l, layer) in self.head.iter().enumerate() {
            let (nin, nout) = (layer.inputs(), layer.outputs());
            let mut z = vec![0.0; batch * nout];
            for r in 0..batch {
                let xr = &x[r * nin..(r + 1) * nin];
                for (o, zo) in z[r * nout..(r + 1) * nout].iter_mut().enumerate() {
                    *zo = layer.bias[o] + dot(layer.weights.row(o), xr);
                }
            }
            let mut a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            let hidden = l + 1 < self.head.len();
            if l == 0 && hidden && self.dropout_rate > 0.0 {
                if let Some(rng) = rng.as_mut() {
                    let keep = 1.0 / (1.0 - self.dropout_rate);
                    let mask: Vec<f64> = (0..a.len())
                        .map(|_| {
                            if rng.gen::<f64>() < self.dropout_rate {
                                0.0
                            } else {
                                keep
                            }
                        })
                        .collect();
                    a.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                    dropout_mask = Some(mask);
                }
            }
            layer_inputs.push(x);
            pre_activations.push(z);
            x = a;
        }
        let cache = ForwardCache {
            batch,
            codes,
            taus,
            layer_inputs,
            pre_activations,
            dropout_mask,
        };
        Ok((x, cache))
    }

    /// Backpropagates `output_grad` (dLoss/dPrediction per row).
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Gradients {
        let batch = cache.batch;
        let mut weights = Vec::with_capacity(self.head.len());
        let mut biases = Vec::with_capacity(self.head.len());
        let mut delta = output_grad.to_vec();
        for (l, layer) in self.head.iter().enumerate().rev() {
            let (nin, nout) = (layer.inputs(), layer.outputs());
            if l == 0 {
                if let Some(mask) = &cache.dropout_mask {
                    delta.iter_mut().zip(mask).for_each(|(d, m)| *d *= m);
                }
            }
            for (d, &z) in delta.iter_mut().zip(&cache.pre_activations[l]) {
                *d *= layer.activation.derivative(z);
            }
            let x = &cache.layer_inputs[l];
            let mut gw = Matrix::zeros(nout, nin);
            let mut gb = vec![0.0; nout];
            let mut dx = vec![0.0; batch * nin];
            for r in 0..batch {
                let xr = &x[r * nin..(r + 1) * nin];
                let dxr = &mut dx[r * nin..(r + 1) * nin];
                for o in 0..nout {
                    let d = delta[r * nout + o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for ((g, &xi), (dxi, &w)) in gw
                        .row_mut(o)
                        .iter_mut()
                        .zip(xr)
                        .zip(dxr.iter_mut().zip(layer.weights.row(o)))
                    {
                        *g += d * xi;
                        *dxi += d * w;
                    }
                }
            }
            weights.push(gw);
            biases.push(gb);
            delta = dx;
        }
        weights.reverse();
        biases.reverse();

        let width = self.input_width();
        let mut offset = 0;
        let mut embeddings = Vec::with_capacity(self.embeddings.len());
        for (t, table) in self.embeddings.iter().enumerate() {
            let dim = table.dim();
            if table.is_frozen() {
                embeddings.push(None);
            } else {
                let mut g = Matrix::zeros(table.rows(), dim);
                for (r, &code) in cache.codes[t].iter().enumerate() {
                    let src = &delta[r * width + offset..r * width + offset + dim];
                    g.row_mut(code as usize)
                        .iter_mut()
                        .zip(src)
                        .for_each(|(a, b)| *a += b);
                }
                embeddings.push(Some(g));
            }
            offset += dim;
        }

        let (omega, phi) = match &self.time2vec {
            Some(t2v) => {
                let k = t2v.width();
                let mut go = vec![0.0; k];
                let mut gp = vec![0.0; k];
                for (r, &tau) in cache.taus.iter().enumerate() {
                    for i in 0..k {
                        let d = delta[r * width + offset + i];
                        let slope = if i == 0 {
                            1.0
                        } else {
                            (t2v.omega[i] * tau + t2v.phi[i]).cos()
                        };
                        go[i] += d * slope * tau;
                        gp[i] += d * slope;
                    }
                }
                (Some(go), Some(gp))
            }
            None => (None, None),
        };

        Gradients {
            embeddings,
            weights,
            biases,
            omega,
            phi,
        }
    }

    /// Inference over every row of `fm`.
    pub fn predict(&self, fm: &FeatureMatrix) -> Result<Vec<f64>> {
        let rows: Vec<usize> = (0..fm.len()).collect();
        let mut out = Vec::with_capacity(rows.len());
        for chunk in rows.chunks(4096) {
            out.extend(self.forward(fm, chunk, Mode::Infer)?.0);
        }
        Ok(out)
    }

    /// Mini-batch RMSProp on mean squared error. Returns the mean training
    /// loss of each epoch. Frozen tables are left untouched.
    pub fn fit(
        &mut self,
        fm: &FeatureMatrix,
        target: &[f64],
        config: &TrainConfig,
    ) -> Result<Vec<f64>> {
        config.validate()?;
        if target.len() != fm.len() {
            return Err(Error::Shape(format!(
                "{} targets for {} feature rows",
                target.len(),
                fm.len()
            )));
        }
        if target.is_empty() {
            return Err(Error::Fit("no training rows".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut state = RmsPropState::for_model(self, config.optimizer);
        let mut order: Vec<usize> = (0..target.len()).collect();
        let mut history = Vec::with_capacity(config.epochs);
        let mut batch_targets = Vec::with_capacity(config.batch_size);
        for epoch in 1..=config.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for chunk in order.chunks(config.batch_size) {
                let (preds, cache) = self.forward(fm, chunk, Mode::Train(&mut rng))?;
                batch_targets.clear();
                batch_targets.extend(chunk.iter().map(|&i| target[i]));
                let (loss, grad) = mse(&preds, &batch_targets);
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch, loss });
                }
                let grads = self.backward(&cache, &grad);
                state.step(self, &grads);
                total += loss * chunk.len() as f64;
            }
            let loss = total / target.len() as f64;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            history.push(loss);
        }
        Ok(history)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
