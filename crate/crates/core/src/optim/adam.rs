use serde::{Deserialize, Serialize};

use super::OptimError;
use crate::layers::ParamTensor;
use crate::model::OptimizerConfig;

/// Adam with bias correction. `t` is shared by all tensors and advances once
/// per successful step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
}

impl Default for AdamState {
    fn default() -> Self {
        Self::from_config(&OptimizerConfig::default())
    }
}

impl AdamState {
    pub fn new(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self, OptimError> {
        if !(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0) {
            return Err(OptimError::BadHyperparameter(format!("betas must lie in (0, 1): {beta1}, {beta2}")));
        }
        Ok(Self { lr, beta1, beta2, eps, t: 0 })
    }

    pub fn from_config(c: &OptimizerConfig) -> Self {
        Self { lr: c.lr, beta1: c.beta1, beta2: c.beta2, eps: c.eps, t: 0 }
    }

    /// Applies one update to every tensor. If any gradient is non-finite the
    /// step is abandoned before a single weight changes.
    pub fn step(&mut self, params: &mut [&mut ParamTensor]) -> Result<(), OptimError> {
        if let Some(p) = params.iter().find(|p| !p.grad.is_finite()) {
            return Err(OptimError::NonFiniteGradient(p.name.clone()));
        }
        self.t += 1;
        let t = self.t as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for p in params.iter_mut() {
            let ParamTensor { value, grad, m, v, .. } = &mut **p;
            let w = value.as_mut_slice();
            let g = grad.as_slice();
            let m = m.as_mut_slice();
            let v = v.as_mut_slice();
            for i in 0..w.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                w[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm measured before clipping.
pub fn clip_gradients(params: &mut [&mut ParamTensor], max_norm: f64) -> f64 {
    let norm = params.iter().map(|p| p.grad.norm_sq()).sum::<f64>().sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.map_inplace(|g| g * k);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::ParamKind;
    use crate::numerics::Matrix;

    fn tensor(values: &[f64], grads: &[f64]) -> ParamTensor {
        let mut p = ParamTensor::new("w", ParamKind::Kernel, Matrix::row_vector(values));
        p.grad = Matrix::row_vector(grads);
        p
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = tensor(&[0.5, -1.0], &[1.0, 1.0]);
        let mut adam = AdamState::default();
        adam.step(&mut [&mut p]).unwrap();
        for (w, w0) in p.value.as_slice().iter().zip([0.5, -1.0]) {
            assert!((w - w0 + 0.001).abs() < 1e-10);
        }
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn zero_gradient_is_a_noop() {
        let mut p = tensor(&[0.25, 3.0], &[0.0, 0.0]);
        AdamState::default().step(&mut [&mut p]).unwrap();
        assert_eq!(p.value.as_slice(), &[0.25, 3.0]);
    }

    #[test]
    fn non_finite_gradient_aborts_without_side_effects() {
        let mut a = tensor(&[1.0], &[0.5]);
        let mut b = tensor(&[2.0], &[f64::INFINITY]);
        b.name = "bad".into();
        let mut adam = AdamState::default();
        let err = adam.step(&mut [&mut a, &mut b]).unwrap_err();
        assert!(matches!(err, OptimError::NonFiniteGradient(ref n) if n == "bad"));
        assert_eq!(a.value.as_slice(), &[1.0]);
        assert_eq!(adam.t, 0);
    }

    #[test]
    fn clipping() {
        let mut p = tensor(&[0.0, 0.0], &[3.0, 0.0]);
        assert_eq!(clip_gradients(&mut [&mut p], 5.0), 3.0);
        assert_eq!(p.grad.as_slice(), &[3.0, 0.0]);
        let mut p = tensor(&[0.0, 0.0], &[6.0, 8.0]);
        assert_eq!(clip_gradients(&mut [&mut p], 5.0), 10.0);
        assert_eq!(p.grad.as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn bad_betas() {
        assert!(AdamState::new(1e-3, 1.0, 0.999, 1e-8).is_err());
    }
}
