//! Forward and backward passes for the layer kinds the presets use.
//!
//! Backward passes accumulate into each [`ParamTensor::grad`]; callers zero
//! gradients at the start of a batch. Caches are consumed by `backward`, so
//! reusing one is a compile error, and a cache that predates a later forward
//! pass is reported as `StaleCache`.

mod batchnorm;
mod dense;
mod dropout;
mod embedding;
mod lstm;
mod param;

pub use batchnorm::{BatchNorm, BatchNormCache, BN_EPS, BN_MOMENTUM};
pub use dense::{Dense, DenseCache};
pub use dropout::{Dropout, DropoutMask};
pub use embedding::{Embedding, EmbeddingCache};
pub use lstm::{Lstm, LstmCache};
pub use param::{ParamKind, ParamTensor, Regularizer};

use serde::{Deserialize, Serialize};

use crate::numerics::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LayerError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index {index} is outside the vocabulary (size {vocab_size})")]
    IndexOutOfVocab { index: u32, vocab_size: usize },
    #[error("sequences in a batch must share a length: expected {expected}, found {found}")]
    RaggedBatch { expected: usize, found: usize },
    #[error("dropout rate must be in [0, 1), got {0}")]
    BadRate(f64),
    #[error("batch normalization needs at least 2 rows in training, got {0}")]
    BatchTooSmall(usize),
    #[error("{0} cache does not belong to the most recent forward pass")]
    StaleCache(&'static str),
}
