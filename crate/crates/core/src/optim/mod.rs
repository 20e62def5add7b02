//! Adam, gradient clipping, early stopping, and the epoch loop.

mod adam;
mod cv;
mod early_stop;
mod train;

pub use adam::{clip_gradients, AdamState};
pub use cv::{cross_validate, CvReport, CvSummary, MeanStd};
pub use early_stop::{Decision, EarlyStopper};
pub use train::{
    batch_ranges, evaluate_dataset, fit, fit_with, predict_dataset, EpochRecord, FitConfig, TrainingHistory,
    DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_MIN_DELTA, DEFAULT_PATIENCE,
};

use crate::ingest::IngestError;
use crate::layers::LayerError;
use crate::model::ModelError;
use crate::objective::ObjectiveError;

#[derive(Debug, thiserror::Error)]
pub enum OptimError {
    #[error("non-finite gradient in tensor `{0}`")]
    NonFiniteGradient(String),
    #[error("{0} dataset is empty")]
    EmptyDataset(&'static str),
    #[error("invalid hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}
