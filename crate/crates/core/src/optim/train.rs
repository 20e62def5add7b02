use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{clip_gradients, AdamState, Decision, EarlyStopper, OptimError};
use crate::model::{Model, Network};
use crate::numerics::Prng;
use crate::objective::{self, MetricsReport, DEFAULT_THRESHOLD};
use crate::textprep::EncodedDataset;

pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_EPOCHS: usize = 10;
pub const DEFAULT_PATIENCE: usize = 2;
pub const DEFAULT_MIN_DELTA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub patience: usize,
    pub min_delta: f64,
    /// Also score the training split in eval mode after every epoch.
    pub eval_train: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: 42,
            patience: DEFAULT_PATIENCE,
            min_delta: DEFAULT_MIN_DELTA,
            eval_train: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch whose weights were restored, 0 when nothing was trained.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingHistory {
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_json_lines(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.to_json_lines().as_bytes())
    }
}

/// Batch boundaries over `n` shuffled examples. The trailing partial batch is
/// kept, except that a lone final example is folded into the batch before it
/// when `min_two` is set.
pub fn batch_ranges(n: usize, batch_size: usize, min_two: bool) -> Vec<std::ops::Range<usize>> {
    let mut out: Vec<std::ops::Range<usize>> =
        (0..n).step_by(batch_size.max(1)).map(|s| s..(s + batch_size).min(n)).collect();
    if min_two && out.len() > 1 && out.last().is_some_and(|r| r.len() == 1) {
        let tail = out.pop().expect("non-empty");
        out.last_mut().expect("non-empty").end = tail.end;
    }
    out
}

/// Eval-mode probabilities over a whole dataset, computed in chunks.
pub fn predict_dataset(network: &Network, data: &EncodedDataset, batch_size: usize) -> Result<Vec<f64>, OptimError> {
    let mut probs = Vec::with_capacity(data.len());
    for chunk in data.examples.chunks(batch_size.max(1)) {
        let batch: Vec<&[u32]> = chunk.iter().map(|e| e.indices.as_slice()).collect();
        probs.extend(network.infer(&batch)?);
    }
    Ok(probs)
}

/// Eval-mode metrics at the default 0.5 threshold.
pub fn evaluate_dataset(
    network: &Network,
    data: &EncodedDataset,
    batch_size: usize,
) -> Result<MetricsReport, OptimError> {
    if data.is_empty() {
        return Err(OptimError::EmptyDataset("evaluation"));
    }
    let probs = predict_dataset(network, data, batch_size)?;
    Ok(objective::evaluate(&probs, &data.labels(), DEFAULT_THRESHOLD)?)
}

/// Minibatch Adam training with early stopping on validation loss. The best
/// weights seen are restored before returning.
pub fn fit(
    model: &mut Model,
    train: &EncodedDataset,
    val: &EncodedDataset,
    cfg: &FitConfig,
) -> Result<TrainingHistory, OptimError> {
    fit_with(model, train, val, cfg, |_| {})
}

/// [`fit`] with a callback invoked after every epoch.
pub fn fit_with(
    model: &mut Model,
    train: &EncodedDataset,
    val: &EncodedDataset,
    cfg: &FitConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainingHistory, OptimError> {
    let mut history = TrainingHistory::default();
    if cfg.epochs == 0 {
        return Ok(history);
    }
    if train.is_empty() {
        return Err(OptimError::EmptyDataset("train"));
    }
    if val.is_empty() {
        return Err(OptimError::EmptyDataset("validation"));
    }
    if cfg.batch_size == 0 {
        return Err(OptimError::BadHyperparameter("batch size must be positive".into()));
    }
    let opt = model.config.optimizer;
    let mut adam = AdamState::from_config(&opt);
    let mut rng = Prng::new(cfg.seed);
    let mut stopper = EarlyStopper::new(cfg.patience, cfg.min_delta);
    let network = &mut model.network;
    let min_two = network.has_batchnorm();
    let val_labels = val.labels();

    for epoch in 1..=cfg.epochs {
        let order = rng.permutation(train.len());
        let mut loss_sum = 0.0;
        for range in batch_ranges(order.len(), cfg.batch_size, min_two) {
            let idx = &order[range];
            let batch: Vec<&[u32]> = idx.iter().map(|&i| train.examples[i].indices.as_slice()).collect();
            let labels: Vec<u8> = idx.iter().map(|&i| train.examples[i].label).collect();
            let (data, penalty, _) = network.loss_and_grad(&batch, &labels, &mut rng, true)?;
            loss_sum += (data + penalty) * idx.len() as f64;
            let mut params = network.params_mut();
            clip_gradients(&mut params, opt.clip_norm);
            adam.step(&mut params)?;
        }
        let val_probs = predict_dataset(network, val, cfg.batch_size)?;
        let val_report = objective::evaluate(&val_probs, &val_labels, DEFAULT_THRESHOLD)?;
        let train_accuracy =
            if cfg.eval_train { Some(evaluate_dataset(network, train, cfg.batch_size)?.accuracy) } else { None };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_loss: val_report.loss,
            val_accuracy: val_report.accuracy,
            train_accuracy,
        };
        on_epoch(&record);
        history.records.push(record);
        if stopper.observe(epoch, val_report.loss, || network.state()) == Decision::Stop {
            history.stopped_early = true;
            break;
        }
    }
    history.best_epoch = stopper.best_epoch();
    if let Some(best) = stopper.best() {
        network.restore(best);
    }
    Ok(history)
}
