//! Analytic-versus-numeric gradient checks for every layer and for the full
//! loss of each preset at miniature scale.

use serde::Serialize;

use crate::layers::{BatchNorm, Dense, Dropout, Embedding, Lstm};
use crate::model::{ModelConfig, ModelError, Network, Preset};
use crate::numerics::{finite_diff_grad, relative_error, Activation, Matrix, NumericsError, Prng, DEFAULT_EPS};
use crate::objective;

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
pub const GRADCHECK_BATCH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorCheck {
    pub check: String,
    pub tensor: String,
    pub rel_error: f64,
}

impl TensorCheck {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.rel_error < tolerance
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GradcheckReport {
    pub checks: Vec<TensorCheck>,
    /// Evaluation points discarded because a probe crossed a ReLU kink.
    pub resampled: usize,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed(GRADCHECK_TOLERANCE))
    }

    /// The largest error; NaN counts as worse than anything.
    pub fn worst(&self) -> Option<&TensorCheck> {
        self.checks.iter().max_by(|a, b| match (a.rel_error.is_nan(), b.rel_error.is_nan()) {
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            _ => a.rel_error.total_cmp(&b.rel_error),
        })
    }

    pub fn extend(&mut self, other: GradcheckReport) {
        self.checks.extend(other.checks);
        self.resampled += other.resampled;
    }

    fn push(&mut self, check: &str, tensor: &str, analytic: &Matrix, numeric: &Matrix) {
        self.checks.push(TensorCheck {
            check: check.to_string(),
            tensor: tensor.to_string(),
            rel_error: relative_error(analytic, numeric),
        });
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GradcheckError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no kink-free evaluation point found for preset {0}")]
    NoSmoothPoint(&'static str),
}

impl From<crate::layers::LayerError> for GradcheckError {
    fn from(e: crate::layers::LayerError) -> Self {
        GradcheckError::Model(e.into())
    }
}

impl From<crate::objective::ObjectiveError> for GradcheckError {
    fn from(e: crate::objective::ObjectiveError) -> Self {
        GradcheckError::Model(e.into())
    }
}

fn random(rows: usize, cols: usize, rng: &mut Prng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

/// `sum(y * r)`; its gradient with respect to `y` is `r`.
fn probe_sum(y: &Matrix, r: &Matrix) -> f64 {
    y.as_slice().iter().zip(r.as_slice()).map(|(a, b)| a * b).sum()
}

fn fd(f: impl FnMut(&Matrix) -> f64, at: &Matrix) -> Result<Matrix, GradcheckError> {
    Ok(finite_diff_grad(f, at, DEFAULT_EPS)?)
}

fn or_nan<T>(r: Result<T, impl std::fmt::Debug>, f: impl FnOnce(T) -> f64) -> f64 {
    r.map(f).unwrap_or(f64::NAN)
}

pub fn check_embedding(seed: u64) -> Result<GradcheckReport, GradcheckError> {
    let mut rng = Prng::new(seed);
    let mut emb = Embedding::new(7, 3, &mut rng);
    let batch = vec![vec![0u32, 3, 5, 3], vec![1, 2, 6, 0], vec![0, 0, 4, 4]];
    let rs: Vec<Matrix> = (0..4).map(|_| random(3, 3, &mut rng)).collect();
    let loss =
        |e: &Embedding| or_nan(e.lookup(&batch), |steps| steps.iter().zip(&rs).map(|(y, r)| probe_sum(y, r)).sum());
    let (_, cache) = emb.forward(&batch)?;
    emb.backward(&rs, cache)?;
    let numeric = fd(
        |m| {
            let mut e = emb.clone();
            e.table.value = m.clone();
            loss(&e)
        },
        &emb.table.value,
    )?;
    let mut report = GradcheckReport::default();
    report.push("embedding", "table", &emb.table.grad, &numeric);
    Ok(report)
}

pub fn check_lstm(seed: u64) -> Result<GradcheckReport, GradcheckError> {
    let (d, h, t, b) = (3, 4, 3, 2);
    let mut rng = Prng::new(seed);
    let mut lstm = Lstm::new(d, h, &mut rng);
    lstm.b.value = random(1, 4 * h, &mut rng);
    let xs: Vec<Matrix> = (0..t).map(|_| random(b, d, &mut rng)).collect();
    let r = random(b, h, &mut rng);
    let (_, cache) = lstm.forward(&xs)?;
    let grad_xs = lstm.backward(&r, cache)?;
    let loss = |l: &Lstm, xs: &[Matrix]| or_nan(l.infer(xs), |y| probe_sum(&y, &r));

    let mut report = GradcheckReport::default();
    for (name, which) in [("W", 0), ("U", 1), ("b", 2)] {
        let at = [&lstm.w, &lstm.u, &lstm.b][which];
        let numeric = fd(
            |m| {
                let mut l = lstm.clone();
                *lstm_slot(&mut l, which) = m.clone();
                loss(&l, &xs)
            },
            &at.value,
        )?;
        report.push("lstm", name, &at.grad, &numeric);
    }
    for (step, gx) in grad_xs.iter().enumerate() {
        let numeric = fd(
            |m| {
                let mut probe = xs.clone();
                probe[step] = m.clone();
                loss(&lstm, &probe)
            },
            &xs[step],
        )?;
        report.push("lstm", &format!("x[{step}]"), gx, &numeric);
    }
    Ok(report)
}

fn lstm_slot(l: &mut Lstm, which: usize) -> &mut Matrix {
    match which {
        0 => &mut l.w.value,
        1 => &mut l.u.value,
        _ => &mut l.b.value,
    }
}

pub fn check_dense(activation: Activation, seed: u64) -> Result<GradcheckReport, GradcheckError> {
    let mut rng = Prng::new(seed);
    let mut dense = Dense::new("dense", 3, 4, activation, &mut rng);
    dense.b.value = random(1, 4, &mut rng);
    let mut x = random(5, 3, &mut rng);
    let mut resampled = 0;
    if activation == Activation::Relu {
        // Every probe moves a pre-activation by at most eps * max(|x|, |W|, 1).
        let margin = 10.0 * DEFAULT_EPS * dense.w.value.max_abs().max(x.max_abs()).max(1.0);
        while dense.pre_activation(&x)?.as_slice().iter().any(|z| z.abs() < margin) {
            if resampled == MAX_POINT_ATTEMPTS {
                return Err(GradcheckError::NoSmoothPoint("dense/relu"));
            }
            x = random(5, 3, &mut rng);
            resampled += 1;
        }
    }
    let r = random(5, 4, &mut rng);
    let (_, cache) = dense.forward(&x)?;
    let gx = dense.backward(&r, cache)?;
    let loss = |d: &Dense, x: &Matrix| or_nan(d.infer(x), |y| probe_sum(&y, &r));
    let check = format!("dense/{}", activation_name(activation));
    let mut report = GradcheckReport { resampled, ..Default::default() };
    let nw = fd(
        |m| {
            let mut d = dense.clone();
            d.w.value = m.clone();
            loss(&d, &x)
        },
        &dense.w.value,
    )?;
    report.push(&check, "W", &dense.w.grad, &nw);
    let nb = fd(
        |m| {
            let mut d = dense.clone();
            d.b.value = m.clone();
            loss(&d, &x)
        },
        &dense.b.value,
    )?;
    report.push(&check, "b", &dense.b.grad, &nb);
    let nx = fd(|m| loss(&dense, m), &x)?;
    report.push(&check, "x", &gx, &nx);
    Ok(report)
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Linear => "linear",
        Activation::Relu => "relu",
        Activation::Sigmoid => "sigmoid",
        Activation::Tanh => "tanh",
    }
}

pub fn check_dropout(seed: u64) -> Result<GradcheckReport, GradcheckError> {
    let mut rng = Prng::new(seed);
    let dropout = Dropout::new(0.5)?;
    let x = random(4, 3, &mut rng);
    let r = random(4, 3, &mut rng);
    let mask = dropout.draw_mask(4, 3, &mut rng);
    let analytic = mask.apply(&r);
    let numeric = fd(|m| probe_sum(&mask.apply(m), &r), &x)?;
    let mut report = GradcheckReport::default();
    report.push("dropout", "x", &analytic, &numeric);
    Ok(report)
}

pub fn check_batchnorm(seed: u64) -> Result<GradcheckReport, GradcheckError> {
    let mut rng = Prng::new(seed);
    let mut bn = BatchNorm::new("bn", 3);
    bn.gamma.value = random(1, 3, &mut rng).map(|v| v + 1.5);
    bn.beta.value = random(1, 3, &mut rng);
    let x = random(4, 3, &mut rng);
    let r = random(4, 3, &mut rng);
    let loss = |n: &BatchNorm, x: &Matrix| or_nan(n.clone().forward(x), |(y, _)| probe_sum(&y, &r));
    let (_, cache) = bn.clone().forward(&x)?;
    let gx = bn.backward(&r, cache)?;
    let mut report = GradcheckReport::default();
    let ng = fd(
        |m| {
            let mut n = bn.clone();
            n.gamma.value = m.clone();
            loss(&n, &x)
        },
        &bn.gamma.value,
    )?;
    report.push("batchnorm", "gamma", &bn.gamma.grad, &ng);
    let nb = fd(
        |m| {
            let mut n = bn.clone();
            n.beta.value = m.clone();
            loss(&n, &x)
        },
        &bn.beta.value,
    )?;
    report.push("batchnorm", "beta", &bn.beta.grad, &nb);
    let nx = fd(|m| loss(&bn, m), &x)?;
    report.push("batchnorm", "x", &gx, &nx);
    Ok(report)
}

/// Standalone cross-entropy against probabilities, and the fused path
/// through a sigmoid output unit.
pub fn check_bce(seed: u64) -> Result<GradcheckReport, GradcheckError> {
    let mut rng = Prng::new(seed);
    let labels = [1u8, 0, 0, 1];
    let probs = Matrix::from_vec(1, 4, (0..4).map(|_| rng.uniform(0.05, 0.95)).collect()).expect("sized");
    let analytic = Matrix::row_vector(&objective::bce_grad(probs.as_slice(), &labels)?);
    let numeric = fd(|m| or_nan(objective::bce(m.as_slice(), &labels), |l| l), &probs)?;
    let mut report = GradcheckReport::default();
    report.push("bce", "p", &analytic, &numeric);

    let mut out = Dense::new("out", 3, 1, Activation::Sigmoid, &mut rng);
    let x = random(4, 3, &mut rng);
    let (p, cache) = out.forward(&x)?;
    let gz = Matrix::from_vec(4, 1, objective::bce_grad_fused(p.as_slice(), &labels)?)?;
    let gx = out.backward_pre(&gz, cache)?;
    let loss = |d: &Dense, x: &Matrix| or_nan(d.infer(x), |p| or_nan(objective::bce(p.as_slice(), &labels), |l| l));
    let nw = fd(
        |m| {
            let mut d = out.clone();
            d.w.value = m.clone();
            loss(&d, &x)
        },
        &out.w.value,
    )?;
    report.push("bce/fused", "W", &out.w.grad, &nw);
    let nx = fd(|m| loss(&out, m), &x)?;
    report.push("bce/fused", "x", &gx, &nx);
    Ok(report)
}

/// Candidate evaluation points tried before giving up on a preset.
pub const MAX_POINT_ATTEMPTS: usize = 32;

/// Full loss (cross-entropy plus penalty) of a miniature preset with dropout
/// masks frozen by reseeding the mask generator for every evaluation.
///
/// Central differences are only a valid oracle where the loss is smooth, so a
/// candidate point (batch plus mask seed) is discarded and redrawn if any
/// probe flips the sign of a ReLU input.
pub fn check_preset(preset: Preset, seed: u64) -> Result<GradcheckReport, GradcheckError> {
    let config = ModelConfig::miniature(preset, seed);
    let network = Network::new(&config)?;
    let mut rng = Prng::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    for attempt in 0..MAX_POINT_ATTEMPTS {
        let batch: Vec<Vec<u32>> = (0..GRADCHECK_BATCH)
            .map(|b| {
                (0..config.maxlen).map(|t| if t < b { 0 } else { rng.below(config.vocab_size as u64) as u32 }).collect()
            })
            .collect();
        let labels: Vec<u8> = (0..GRADCHECK_BATCH).map(|b| (b % 2) as u8).collect();
        let mask_seed = rng.next_u64();
        if let Some(mut report) = check_point(&network, preset, &batch, &labels, mask_seed)? {
            report.resampled = attempt;
            return Ok(report);
        }
    }
    Err(GradcheckError::NoSmoothPoint(preset.name()))
}

fn check_point(
    network: &Network,
    preset: Preset,
    batch: &[Vec<u32>],
    labels: &[u8],
    mask_seed: u64,
) -> Result<Option<GradcheckReport>, GradcheckError> {
    let mut network = network.clone();
    let base = network.forward(batch, &mut Prng::new(mask_seed))?;
    let pattern = network.relu_pattern(&base);
    network.loss_and_grad(batch, labels, &mut Prng::new(mask_seed), true)?;

    let check = format!("model/{}", preset.name());
    let mut report = GradcheckReport::default();
    for i in 0..network.params().len() {
        let (name, at, analytic) = {
            let p = &network.params()[i];
            (p.name.clone(), p.value.clone(), p.grad.clone())
        };
        let mut probe_net = network.clone();
        let mut crossed = false;
        let numeric = fd(
            |m| {
                probe_net.params_mut()[i].value = m.clone();
                match probe_net.forward(batch, &mut Prng::new(mask_seed)) {
                    Ok(cache) => {
                        crossed |= probe_net.relu_pattern(&cache) != pattern;
                        or_nan(objective::bce(&cache.probs, labels), |l| l + objective::reg_value(probe_net.params()))
                    }
                    Err(_) => f64::NAN,
                }
            },
            &at,
        )?;
        if crossed {
            return Ok(None);
        }
        report.push(&check, &name, &analytic, &numeric);
    }
    Ok(Some(report))
}

/// Every per-layer check.
pub fn run_layers(seed: u64) -> Result<GradcheckReport, GradcheckError> {
    let mut report = GradcheckReport::default();
    report.extend(check_embedding(seed)?);
    report.extend(check_lstm(seed)?);
    for act in [Activation::Linear, Activation::Relu, Activation::Sigmoid, Activation::Tanh] {
        report.extend(check_dense(act, seed)?);
    }
    report.extend(check_dropout(seed)?);
    report.extend(check_batchnorm(seed)?);
    report.extend(check_bce(seed)?);
    Ok(report)
}

/// Every layer check followed by the end-to-end check of each preset.
pub fn run_all(seed: u64) -> Result<GradcheckReport, GradcheckError> {
    let mut report = run_layers(seed)?;
    for preset in Preset::ALL {
        report.extend(check_preset(preset, seed)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layers_pass() {
        for seed in [1, 2] {
            let mut r = check_embedding(seed).unwrap();
            r.extend(check_lstm(seed).unwrap());
            r.extend(check_dense(Activation::Relu, seed).unwrap());
            r.extend(check_dropout(seed).unwrap());
            r.extend(check_batchnorm(seed).unwrap());
            r.extend(check_bce(seed).unwrap());
            assert!(r.passed(), "{:?}", r.worst());
        }
    }

    #[test]
    fn worst_prefers_nan() {
        let mk = |e| TensorCheck { check: "c".into(), tensor: "t".into(), rel_error: e };
        let r = GradcheckReport { checks: vec![mk(1e-9), mk(f64::NAN), mk(0.5)], resampled: 0 };
        assert!(r.worst().unwrap().rel_error.is_nan());
        assert!(!r.passed());
    }
}
