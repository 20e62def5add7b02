use serde::{Deserialize, Serialize};

use super::{evaluate_dataset, fit, FitConfig, OptimError};
use crate::ingest::{kfold, Dataset};
use crate::model::{Model, ModelConfig};
use crate::objective::MetricsReport;
use crate::textprep::{PrepConfig, TextPipeline};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub stddev: f64,
}

impl MeanStd {
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stddev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, stddev }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub loss: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<MetricsReport>,
    pub summary: CvSummary,
}

impl CvSummary {
    pub fn from_reports(reports: &[MetricsReport]) -> Self {
        let col = |f: fn(&MetricsReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
        Self {
            accuracy: col(|r| r.accuracy),
            precision: col(|r| r.precision),
            recall: col(|r| r.recall),
            f1: col(|r| r.f1),
            loss: col(|r| r.loss),
        }
    }
}

/// k-fold cross-validation on raw articles. Each fold gets its own
/// vocabulary built from its training part and a model seeded with
/// `seed + fold`; the held-out fold doubles as the early-stopping set.
pub fn cross_validate(
    model_config: &ModelConfig,
    prep: &PrepConfig,
    fit_config: &FitConfig,
    ds: &Dataset,
    k: usize,
    seed: u64,
) -> Result<CvReport, OptimError> {
    let pipeline = TextPipeline::default();
    let mut folds = Vec::with_capacity(k);
    for (fold, (train, val)) in kfold(ds, k, seed)?.into_iter().enumerate() {
        let (vocab, train_enc, val_enc) = pipeline.prepare_split(&train, &val, prep);
        let fold_seed = seed.wrapping_add(fold as u64);
        let config =
            ModelConfig { vocab_size: vocab.len(), maxlen: prep.maxlen, seed: fold_seed, ..model_config.clone() };
        let mut model = Model::build(config, vocab)?;
        fit(&mut model, &train_enc, &val_enc, &FitConfig { seed: fold_seed, ..*fit_config })?;
        folds.push(evaluate_dataset(&model.network, &val_enc, fit_config.batch_size)?);
    }
    let summary = CvSummary::from_reports(&folds);
    Ok(CvReport { folds, summary })
}
