//! Sequence-classification engine for fake-news detection.

pub mod gradcheck;
pub mod ingest;
pub mod layers;
pub mod model;
pub mod numerics;
pub mod objective;
pub mod optim;
pub mod textprep;

pub use ingest::{Article, Dataset, Label};
pub use model::{checkpoint, Model, ModelConfig, ModelError, Prediction, Preset};
pub use numerics::{Matrix, Prng};
pub use objective::{ConfusionMatrix, MetricsReport};
pub use optim::{fit, FitConfig, OptimError, TrainingHistory};
pub use textprep::{EncodedDataset, PrepConfig, TextPipeline, Vocabulary};
