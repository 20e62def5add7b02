use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::layers::Regularizer;
use crate::numerics::Activation;

pub const EMBED_DIM: usize = 100;
pub const LSTM_UNITS: usize = 150;
pub const LAMBDA_L1: f64 = 1e-5;
pub const LAMBDA_L2: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Baseline,
    Regularized,
    Optimized,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Baseline, Preset::Regularized, Preset::Optimized];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Baseline => "baseline",
            Preset::Regularized => "regularized",
            Preset::Optimized => "optimized",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| ModelError::UnknownPreset(s.to_string()))
    }
}

/// One fully connected stage of the classifier head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseSpec {
    pub width: usize,
    pub activation: Activation,
    pub regularizer: Regularizer,
    /// Batch-norm between the affine map and the activation.
    pub batchnorm: bool,
    /// Dropout rate applied after the activation (0 = none).
    pub dropout_after: f64,
}

impl DenseSpec {
    pub const OUTPUT: DenseSpec = DenseSpec {
        width: 1,
        activation: Activation::Sigmoid,
        regularizer: Regularizer::NONE,
        batchnorm: false,
        dropout_after: 0.0,
    };

    fn hidden(width: usize, regularizer: Regularizer, batchnorm: bool, dropout_after: f64) -> Self {
        Self { width, activation: Activation::Relu, regularizer, batchnorm, dropout_after }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm ceiling.
    pub clip_norm: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, clip_norm: 5.0 }
    }
}

/// Fully expanded architecture. Presets are pure functions into this type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub preset: Preset,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub lstm_units: usize,
    pub maxlen: usize,
    pub embed_dropout: f64,
    pub lstm_dropout: f64,
    pub lstm_regularizer: Regularizer,
    pub dense_stack: Vec<DenseSpec>,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl ModelConfig {
    pub fn preset(preset: Preset, vocab_size: usize, maxlen: usize, seed: u64) -> Self {
        let l1 = Regularizer::l1(LAMBDA_L1);
        let l1_l2 = l1.with_l2(LAMBDA_L2);
        let (embed_dropout, lstm_dropout, lstm_regularizer, dense_stack, lr) = match preset {
            Preset::Baseline => (
                0.2,
                0.2,
                Regularizer::NONE,
                vec![DenseSpec::hidden(64, l1, false, 0.0), DenseSpec::hidden(16, l1, false, 0.0)],
                1e-3,
            ),
            Preset::Regularized => (
                0.3,
                0.3,
                Regularizer::l2(LAMBDA_L2),
                vec![DenseSpec::hidden(64, l1_l2, false, 0.3), DenseSpec::hidden(16, l1_l2, false, 0.3)],
                1e-3,
            ),
            Preset::Optimized => (
                0.3,
                0.3,
                Regularizer::l2(LAMBDA_L2),
                vec![
                    DenseSpec::hidden(128, l1_l2, true, 0.3),
                    DenseSpec::hidden(64, l1_l2, true, 0.3),
                    DenseSpec::hidden(16, l1_l2, true, 0.3),
                ],
                5e-4,
            ),
        };
        let mut dense_stack = dense_stack;
        dense_stack.push(DenseSpec::OUTPUT);
        Self {
            preset,
            vocab_size,
            embed_dim: EMBED_DIM,
            lstm_units: LSTM_UNITS,
            maxlen,
            embed_dropout,
            lstm_dropout,
            lstm_regularizer,
            dense_stack,
            optimizer: OptimizerConfig { lr, ..OptimizerConfig::default() },
            seed,
        }
    }

    /// Small-shape variant for gradient checking: V=50, d=8, H=8, maxlen=6.
    pub fn miniature(preset: Preset, seed: u64) -> Self {
        Self { embed_dim: 8, lstm_units: 8, ..Self::preset(preset, 50, 6, seed) }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.vocab_size < 2 || self.embed_dim == 0 || self.lstm_units == 0 || self.maxlen == 0 {
            return bad("vocab_size >= 2 and positive embed_dim, lstm_units, maxlen are required");
        }
        match self.dense_stack.last() {
            Some(last) if *last == DenseSpec::OUTPUT => {}
            _ => return bad("the final dense stage must be (1, sigmoid, no regularizer, no batch-norm)"),
        }
        if self.dense_stack.iter().any(|s| s.width == 0) {
            return bad("dense widths must be positive");
        }
        let rates =
            [self.embed_dropout, self.lstm_dropout].into_iter().chain(self.dense_stack.iter().map(|s| s.dropout_after));
        for r in rates {
            if !(0.0..1.0).contains(&r) {
                return bad("dropout rates must lie in [0, 1)");
            }
        }
        Ok(())
    }

    pub fn batchnorm_stages(&self) -> usize {
        self.dense_stack.iter().filter(|s| s.batchnorm).count()
    }

    pub fn has_batchnorm(&self) -> bool {
        self.batchnorm_stages() > 0
    }

    /// Trainable parameter count implied by the shapes.
    pub fn param_count(&self) -> usize {
        let (d, h) = (self.embed_dim, self.lstm_units);
        let mut total = self.vocab_size * d + 4 * h * (d + h + 1);
        let mut width = h;
        for s in &self.dense_stack {
            total += width * s.width + s.width;
            if s.batchnorm {
                total += 2 * s.width;
            }
            width = s.width;
        }
        total
    }
}
