use super::model::{CompositeEmbeddingModel, Gradients};

/// RMSProp hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self {
            learning_rate: 0.0002,
            decay: 0.9,
            epsilon: 1e-8,
        }
    }
}

/// `acc <- decay*acc + (1-decay)*g^2`, then `p <- p - lr*g / (sqrt(acc) + eps)`.
pub fn rmsprop_step(params: &mut [f64], grads: &[f64], acc: &mut [f64], opt: &RmsProp) {
    debug_assert_eq!(params.len(), grads.len());
    debug_assert_eq!(params.len(), acc.len());
    for ((p, &g), a) in params.iter_mut().zip(grads).zip(acc.iter_mut()) {
        *a = opt.decay * *a + (1.0 - opt.decay) * g * g;
        *p -= opt.learning_rate * g / (a.sqrt() + opt.epsilon);
    }
}

/// Squared-gradient running averages, one block per model parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState {
    pub config: RmsProp,
    accumulators: Vec<Vec<f64>>,
}

impl RmsPropState {
    pub fn for_model(model: &CompositeEmbeddingModel, config: RmsProp) -> Self {
        let accumulators = model
            .param_ids()
            .into_iter()
            .map(|id| vec![0.0; model.param(id).len()])
            .collect();
        Self {
            config,
            accumulators,
        }
    }

    pub fn accumulators(&self) -> &[Vec<f64>] {
        &self.accumulators
    }

    /// Updates every block that has a gradient; frozen tables have none.
    pub fn step(&mut self, model: &mut CompositeEmbeddingModel, grads: &Gradients) {
        for (k, id) in model.param_ids().into_iter().enumerate() {
            if let Some(g) = grads.get(id) {
                rmsprop_step(
                    model.param_mut(id),
                    g,
                    &mut self.accumulators[k],
                    &self.config,
                );
            }
        }
    }
}
