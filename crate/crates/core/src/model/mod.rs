//! The three architecture presets, checkpoints, and single-text prediction.

pub mod checkpoint;
mod config;
mod network;

pub use config::{DenseSpec, ModelConfig, OptimizerConfig, Preset, EMBED_DIM, LAMBDA_L1, LAMBDA_L2, LSTM_UNITS};
pub use network::{Block, Network, NetworkCache, NetworkState, OutputGrad};

use serde::{Deserialize, Serialize};

use crate::ingest::Label;
use crate::layers::LayerError;
use crate::objective::{ObjectiveError, DEFAULT_THRESHOLD};
use crate::textprep::{TextPipeline, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("a vocabulary with at least one real token is required")]
    VocabMissing,
    #[error("vocabulary has {vocab} entries but the config expects {config}")]
    VocabMismatch { vocab: usize, config: usize },
    #[error("unknown preset `{0}` (valid: baseline, regularized, optimized)")]
    UnknownPreset(String),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error(transparent)]
    Objective(ObjectiveError),
    #[error("not a seqveritas checkpoint (bad magic or truncated file)")]
    BadMagic,
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("checkpoint does not match its config: {0}")]
    ShapeMismatchOnLoad(String),
    #[error("checkpoint is corrupt: {0}")]
    Corrupt(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: Label,
}

impl Prediction {
    pub fn from_probability(probability: f64) -> Self {
        let label = if probability >= DEFAULT_THRESHOLD { Label::Fake } else { Label::True };
        Self { probability, label }
    }
}

/// A network bundled with the vocabulary and text settings it was trained on.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub network: Network,
    pipeline: TextPipeline,
}

impl Model {
    /// Fresh, seeded initialization for `config`.
    pub fn build(config: ModelConfig, vocab: Vocabulary) -> Result<Self, ModelError> {
        let network = Network::new(&config)?;
        Self::from_parts(config, vocab, network)
    }

    pub fn from_parts(config: ModelConfig, vocab: Vocabulary, network: Network) -> Result<Self, ModelError> {
        if vocab.is_empty() {
            return Err(ModelError::VocabMissing);
        }
        if vocab.len() != config.vocab_size {
            return Err(ModelError::VocabMismatch { vocab: vocab.len(), config: config.vocab_size });
        }
        Ok(Self { config, vocab, network, pipeline: TextPipeline::default() })
    }

    pub fn preset(&self) -> Preset {
        self.config.preset
    }

    pub fn encode(&self, raw_text: &str) -> Vec<u32> {
        self.pipeline.encode_text(raw_text, &self.vocab, self.config.maxlen)
    }

    /// Full preprocessing with the stored vocabulary, then an eval-mode pass.
    pub fn predict(&self, raw_text: &str) -> Result<Prediction, ModelError> {
        let probs = self.network.infer(&[self.encode(raw_text)])?;
        Ok(Prediction::from_probability(probs[0]))
    }

    pub fn predict_batch(&self, texts: &[&str]) -> Result<Vec<Prediction>, ModelError> {
        let encoded: Vec<Vec<u32>> = texts.iter().map(|t| self.encode(t)).collect();
        Ok(self.network.infer(&encoded)?.into_iter().map(Prediction::from_probability).collect())
    }
}
