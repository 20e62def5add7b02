//! Layer composition shared by all presets:
//!
//! ```text
//! Embedding → Dropout → LSTM (last state) → Dropout → [Dense → (BatchNorm) → act → (Dropout)]* → sigmoid
//! ```

use super::{ModelConfig, ModelError};
use crate::layers::{
    BatchNorm, BatchNormCache, Dense, DenseCache, Dropout, DropoutMask, Embedding, EmbeddingCache, LayerError, Lstm,
    LstmCache, Mode, ParamTensor,
};
use crate::numerics::{Activation, Matrix, Prng};
use crate::objective::{self, ObjectiveError};

#[derive(Debug, Clone)]
pub struct Block {
    pub dense: Dense,
    pub norm: Option<BatchNorm>,
    /// Applied after `norm`; `Linear` when the dense layer carries the activation itself.
    pub activation: Activation,
    pub dropout: Dropout,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub embedding: Embedding,
    pub embed_dropout: Dropout,
    pub lstm: Lstm,
    pub lstm_dropout: Dropout,
    pub blocks: Vec<Block>,
}

#[derive(Debug)]
struct BlockCache {
    dense: DenseCache,
    norm: Option<BatchNormCache>,
    /// Input to `activation`, kept only when batch-norm is present.
    normed: Option<Matrix>,
    mask: DropoutMask,
}

/// Everything `backward` needs from one training forward pass.
#[derive(Debug)]
pub struct NetworkCache {
    embedding: EmbeddingCache,
    embed_masks: Vec<DropoutMask>,
    lstm: LstmCache,
    lstm_mask: DropoutMask,
    blocks: Vec<BlockCache>,
    pub probs: Vec<f64>,
}

/// Upstream gradient for the output unit.
#[derive(Debug, Clone)]
pub enum OutputGrad {
    /// `dL/dz` at the output logit (fused sigmoid + cross-entropy).
    Logit(Vec<f64>),
    /// `dL/dp` at the output probability.
    Prob(Vec<f64>),
}

/// Parameter values and batch-norm running statistics, for early-stopping
/// restores.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    values: Vec<Matrix>,
    running: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Network {
    pub fn new(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = Prng::new(config.seed);
        let embedding = Embedding::new(config.vocab_size, config.embed_dim, &mut rng);
        let mut lstm = Lstm::new(config.embed_dim, config.lstm_units, &mut rng);
        lstm.set_regularizer(config.lstm_regularizer);
        let mut blocks = Vec::with_capacity(config.dense_stack.len());
        let mut width = config.lstm_units;
        for (i, layer) in config.dense_stack.iter().enumerate() {
            let name = format!("dense{i}");
            let dense_act = if layer.batchnorm { Activation::Linear } else { layer.activation };
            let dense = Dense::new(&name, width, layer.width, dense_act, &mut rng).with_regularizer(layer.regularizer);
            let norm = layer.batchnorm.then(|| BatchNorm::new(&format!("bn{i}"), layer.width));
            let activation = if layer.batchnorm { layer.activation } else { Activation::Linear };
            blocks.push(Block { dense, norm, activation, dropout: Dropout::new(layer.dropout_after)? });
            width = layer.width;
        }
        Ok(Self {
            embedding,
            embed_dropout: Dropout::new(config.embed_dropout)?,
            lstm,
            lstm_dropout: Dropout::new(config.lstm_dropout)?,
            blocks,
        })
    }

    /// Every trainable tensor in a fixed order.
    pub fn params(&self) -> Vec<&ParamTensor> {
        let mut out = vec![&self.embedding.table, &self.lstm.w, &self.lstm.u, &self.lstm.b];
        for b in &self.blocks {
            out.push(&b.dense.w);
            out.push(&b.dense.b);
            if let Some(n) = &b.norm {
                out.push(&n.gamma);
                out.push(&n.beta);
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = vec![&mut self.embedding.table, &mut self.lstm.w, &mut self.lstm.u, &mut self.lstm.b];
        for b in &mut self.blocks {
            out.push(&mut b.dense.w);
            out.push(&mut b.dense.b);
            if let Some(n) = &mut b.norm {
                out.push(&mut n.gamma);
                out.push(&mut n.beta);
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn batchnorms(&self) -> impl Iterator<Item = &BatchNorm> {
        self.blocks.iter().filter_map(|b| b.norm.as_ref())
    }

    pub fn has_batchnorm(&self) -> bool {
        self.batchnorms().next().is_some()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(ParamTensor::zero_grad);
    }

    pub fn state(&self) -> NetworkState {
        NetworkState {
            values: self.params().iter().map(|p| p.value.clone()).collect(),
            running: self.batchnorms().map(|n| (n.running_mean.clone(), n.running_var.clone())).collect(),
        }
    }

    pub fn restore(&mut self, state: &NetworkState) {
        for (p, v) in self.params_mut().into_iter().zip(&state.values) {
            p.value.clone_from(v);
        }
        for (n, (m, v)) in self.blocks.iter_mut().filter_map(|b| b.norm.as_mut()).zip(&state.running) {
            n.running_mean.clone_from(m);
            n.running_var.clone_from(v);
        }
    }

    /// Eval-mode probabilities: dropout off, batch-norm running statistics.
    pub fn infer<S: AsRef<[u32]>>(&self, batch: &[S]) -> Result<Vec<f64>, LayerError> {
        let steps = self.embedding.lookup(batch)?;
        let mut x = self.lstm.infer(&steps)?;
        for b in &self.blocks {
            x = b.dense.infer(&x)?;
            if let Some(n) = &b.norm {
                x = n.infer(&x)?;
                let act = b.activation;
                x.map_inplace(|v| act.apply(v));
            }
        }
        Ok(x.into_vec())
    }

    /// Training-mode forward pass. Dropout masks are drawn from `rng` in a
    /// fixed order: embedding steps, LSTM output, then each block.
    pub fn forward<S: AsRef<[u32]>>(&mut self, batch: &[S], rng: &mut Prng) -> Result<NetworkCache, LayerError> {
        let (steps, emb_cache) = self.embedding.forward(batch)?;
        let mut embed_masks = Vec::with_capacity(steps.len());
        let mut dropped = Vec::with_capacity(steps.len());
        for s in &steps {
            let (y, m) = self.embed_dropout.forward(s, Mode::Train, rng);
            dropped.push(y);
            embed_masks.push(m);
        }
        let (h, lstm_cache) = self.lstm.forward(&dropped)?;
        let (mut x, lstm_mask) = self.lstm_dropout.forward(&h, Mode::Train, rng);
        let mut caches = Vec::with_capacity(self.blocks.len());
        for b in &mut self.blocks {
            let (y, dense_cache) = b.dense.forward(&x)?;
            let (y, norm, normed) = match &mut b.norm {
                Some(n) => {
                    let (z, c) = n.forward(&y)?;
                    let act = b.activation;
                    (z.map(|v| act.apply(v)), Some(c), Some(z))
                }
                None => (y, None, None),
            };
            let (y, mask) = b.dropout.forward(&y, Mode::Train, rng);
            caches.push(BlockCache { dense: dense_cache, norm, normed, mask });
            x = y;
        }
        Ok(NetworkCache {
            embedding: emb_cache,
            embed_masks,
            lstm: lstm_cache,
            lstm_mask,
            blocks: caches,
            probs: x.into_vec(),
        })
    }

    /// Which ReLU inputs were positive in `cache`, in a fixed unit order.
    pub fn relu_pattern(&self, cache: &NetworkCache) -> Vec<bool> {
        let mut out = Vec::new();
        for (b, c) in self.blocks.iter().zip(&cache.blocks) {
            let input = match &c.normed {
                Some(z) if b.activation == Activation::Relu => z,
                None if b.dense.activation == Activation::Relu => c.dense.pre_activation(),
                _ => continue,
            };
            out.extend(input.as_slice().iter().map(|&v| v > 0.0));
        }
        out
    }

    /// Backpropagates from the output unit through every layer, accumulating
    /// into the parameter gradients. Regularizer terms are not included.
    pub fn backward(&mut self, cache: NetworkCache, grad: OutputGrad) -> Result<(), LayerError> {
        let n = cache.probs.len();
        let (grad, fused) = match grad {
            OutputGrad::Logit(g) => (g, true),
            OutputGrad::Prob(g) => (g, false),
        };
        if grad.len() != n {
            return Err(LayerError::Shape(format!("{} output grads for batch {n}", grad.len())));
        }
        let mut g = Matrix::from_vec(n, 1, grad)?;
        let last = self.blocks.len() - 1;
        for (i, (b, c)) in self.blocks.iter_mut().zip(cache.blocks).enumerate().rev() {
            g = c.mask.apply(&g);
            if let (Some(norm), Some(nc), Some(z)) = (b.norm.as_mut(), c.norm, c.normed) {
                let act = b.activation;
                g = g.zip_map(&z, "activation_backward", |gy, zz| gy * act.derivative(zz))?;
                g = norm.backward(&g, nc)?;
                g = b.dense.backward(&g, c.dense)?;
            } else if i == last && fused {
                g = b.dense.backward_pre(&g, c.dense)?;
            } else {
                g = b.dense.backward(&g, c.dense)?;
            }
        }
        let g = cache.lstm_mask.apply(&g);
        let grad_steps = self.lstm.backward(&g, cache.lstm)?;
        let grad_steps: Vec<Matrix> = grad_steps.iter().zip(&cache.embed_masks).map(|(gs, m)| m.apply(gs)).collect();
        self.embedding.backward(&grad_steps, cache.embedding)
    }

    /// Mean cross-entropy plus weight penalty for one frozen-mask training pass.
    pub fn loss<S: AsRef<[u32]>>(&mut self, batch: &[S], labels: &[u8], rng: &mut Prng) -> Result<f64, ModelError> {
        let cache = self.forward(batch, rng)?;
        let data = objective::bce(&cache.probs, labels)?;
        Ok(data + objective::reg_value(self.params()))
    }

    /// Zeroes gradients, runs forward and backward, and adds the penalty
    /// gradient. Returns `(data_loss, penalty, probs)`.
    pub fn loss_and_grad<S: AsRef<[u32]>>(
        &mut self,
        batch: &[S],
        labels: &[u8],
        rng: &mut Prng,
        fused: bool,
    ) -> Result<(f64, f64, Vec<f64>), ModelError> {
        self.zero_grad();
        let cache = self.forward(batch, rng)?;
        let probs = cache.probs.clone();
        let data = objective::bce(&probs, labels)?;
        let grad = if fused {
            OutputGrad::Logit(objective::bce_grad_fused(&probs, labels)?)
        } else {
            OutputGrad::Prob(objective::bce_grad(&probs, labels)?)
        };
        self.backward(cache, grad)?;
        let penalty = objective::reg_penalty(&mut self.params_mut());
        Ok((data, penalty, probs))
    }
}

impl From<ObjectiveError> for ModelError {
    fn from(e: ObjectiveError) -> Self {
        ModelError::Objective(e)
    }
}
