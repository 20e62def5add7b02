//! Loss, weight penalties, and classification metrics. The positive class
//! is fake (label 1).

use serde::{Deserialize, Serialize};

use crate::layers::{ParamKind, ParamTensor};

pub const PROB_CLAMP: f64 = 1e-7;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObjectiveError {
    #[error("{probs} predictions for {labels} labels")]
    ShapeMismatch { probs: usize, labels: usize },
    #[error("cannot evaluate an empty batch")]
    EmptyBatch,
}

fn check(probs: &[f64], labels: &[u8]) -> Result<(), ObjectiveError> {
    if probs.len() != labels.len() {
        return Err(ObjectiveError::ShapeMismatch { probs: probs.len(), labels: labels.len() });
    }
    if probs.is_empty() {
        return Err(ObjectiveError::EmptyBatch);
    }
    Ok(())
}

#[inline]
fn clamp(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Mean binary cross-entropy with probabilities clamped to `[1e-7, 1 - 1e-7]`.
pub fn bce(probs: &[f64], labels: &[u8]) -> Result<f64, ObjectiveError> {
    check(probs, labels)?;
    Ok(bce_sum(probs, labels) / probs.len() as f64)
}

pub(crate) fn bce_sum(probs: &[f64], labels: &[u8]) -> f64 {
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = clamp(p);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum()
}

/// `dL/dp` of the mean loss (unfused path). Zero where the clamp is active.
pub fn bce_grad(probs: &[f64], labels: &[u8]) -> Result<Vec<f64>, ObjectiveError> {
    check(probs, labels)?;
    let n = probs.len() as f64;
    Ok(probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
                return 0.0;
            }
            (p - f64::from(y)) / (p * (1.0 - p)) / n
        })
        .collect())
}

/// Gradient of the mean loss with respect to the output logit when the
/// output unit is a sigmoid: `(p - y) / n`.
pub fn bce_grad_fused(probs: &[f64], labels: &[u8]) -> Result<Vec<f64>, ObjectiveError> {
    check(probs, labels)?;
    let n = probs.len() as f64;
    Ok(probs.iter().zip(labels).map(|(&p, &y)| (p - f64::from(y)) / n).collect())
}

fn regularizable(p: &ParamTensor) -> bool {
    p.kind == ParamKind::Kernel && !p.regularizer.is_none()
}

/// Penalty value only.
pub fn reg_value<'a>(params: impl IntoIterator<Item = &'a ParamTensor>) -> f64 {
    params
        .into_iter()
        .filter(|p| regularizable(p))
        .map(|p| {
            let r = p.regularizer;
            p.value.as_slice().iter().map(|w| r.l1 * w.abs() + r.l2 * w * w).sum::<f64>()
        })
        .sum()
}

/// Returns the total penalty and adds its (sub)gradient to each kernel's
/// `grad`: `l1 * sign(w)` with `sign(0) = 0`, plus `2 * l2 * w`.
pub fn reg_penalty(params: &mut [&mut ParamTensor]) -> f64 {
    let mut total = 0.0;
    for p in params.iter_mut().filter(|p| regularizable(p)) {
        let r = p.regularizer;
        let ParamTensor { value, grad, .. } = &mut **p;
        for (w, g) in value.as_slice().iter().zip(grad.as_mut_slice()) {
            total += r.l1 * w.abs() + r.l2 * w * w;
            let sign = if *w > 0.0 {
                1.0
            } else if *w < 0.0 {
                -1.0
            } else {
                0.0
            };
            *g += r.l1 * sign + 2.0 * r.l2 * w;
        }
    }
    total
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub loss: f64,
    #[serde(flatten)]
    pub confusion: ConfusionMatrix,
    /// Set when any ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

impl MetricsReport {
    pub fn from_confusion(confusion: ConfusionMatrix, loss: f64) -> Self {
        let ConfusionMatrix { tp, fp, tn, fn_ } = confusion;
        let mut degenerate = false;
        let mut ratio = |num: usize, den: usize| {
            if den == 0 {
                degenerate = true;
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let accuracy = ratio(tp + tn, confusion.total());
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            degenerate = true;
            0.0
        };
        Self { accuracy, precision, recall, f1, loss, confusion, degenerate }
    }
}

/// Predicts fake iff `p >= threshold` and tallies the confusion matrix.
pub fn evaluate(probs: &[f64], labels: &[u8], threshold: f64) -> Result<MetricsReport, ObjectiveError> {
    check(probs, labels)?;
    let mut cm = ConfusionMatrix::default();
    for (&p, &y) in probs.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(MetricsReport::from_confusion(cm, bce(probs, labels)?))
}
