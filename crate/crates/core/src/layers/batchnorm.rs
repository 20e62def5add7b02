use super::{LayerError, Mode, ParamKind, ParamTensor};
use crate::numerics::Matrix;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-feature batch normalization.
///
/// Training normalizes with the biased batch variance; the running variance
/// is updated with the unbiased estimate `var * n / (n - 1)`.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: ParamTensor,
    pub beta: ParamTensor,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

#[derive(Debug)]
pub struct BatchNormCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(name: &str, features: usize) -> Self {
        Self {
            gamma: ParamTensor::new(format!("{name}.gamma"), ParamKind::Scale, Matrix::filled(1, features, 1.0)),
            beta: ParamTensor::new(format!("{name}.beta"), ParamKind::Shift, Matrix::zeros(1, features)),
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
        }
    }

    pub fn features(&self) -> usize {
        self.running_mean.len()
    }

    fn check_width(&self, x: &Matrix) -> Result<(), LayerError> {
        if x.cols() != self.features() {
            return Err(LayerError::Shape(format!("batchnorm width {} != {}", x.cols(), self.features())));
        }
        Ok(())
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix, LayerError> {
        self.check_width(x)?;
        let mut y = x.clone();
        let (g, b) = (self.gamma.value.as_slice(), self.beta.value.as_slice());
        for r in 0..y.rows() {
            for (j, v) in y.row_mut(r).iter_mut().enumerate() {
                *v = g[j] * (*v - self.running_mean[j]) / (self.running_var[j] + self.eps).sqrt() + b[j];
            }
        }
        Ok(y)
    }

    /// Training pass over a batch of at least two rows; updates running stats.
    pub fn forward(&mut self, x: &Matrix) -> Result<(Matrix, BatchNormCache), LayerError> {
        self.check_width(x)?;
        let n = x.rows();
        if n < 2 {
            return Err(LayerError::BatchTooSmall(n));
        }
        let nf = n as f64;
        let mean: Vec<f64> = x.col_sums().into_iter().map(|s| s / nf).collect();
        let mut var = vec![0.0; self.features()];
        for row in x.iter_rows() {
            for (j, &v) in row.iter().enumerate() {
                var[j] += (v - mean[j]).powi(2);
            }
        }
        var.iter_mut().for_each(|v| *v /= nf);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut xhat = x.clone();
        for r in 0..n {
            for (j, v) in xhat.row_mut(r).iter_mut().enumerate() {
                *v = (*v - mean[j]) * inv_std[j];
            }
        }
        let (g, b) = (self.gamma.value.as_slice(), self.beta.value.as_slice());
        let mut y = xhat.clone();
        for r in 0..n {
            for (j, v) in y.row_mut(r).iter_mut().enumerate() {
                *v = g[j] * *v + b[j];
            }
        }
        let m = self.momentum;
        for j in 0..self.features() {
            self.running_mean[j] = m * self.running_mean[j] + (1.0 - m) * mean[j];
            self.running_var[j] = m * self.running_var[j] + (1.0 - m) * var[j] * nf / (nf - 1.0);
        }
        Ok((y, BatchNormCache { xhat, inv_std }))
    }

    pub fn forward_mode(&mut self, x: &Matrix, mode: Mode) -> Result<(Matrix, Option<BatchNormCache>), LayerError> {
        match mode {
            Mode::Train => self.forward(x).map(|(y, c)| (y, Some(c))),
            Mode::Eval => self.infer(x).map(|y| (y, None)),
        }
    }

    pub fn backward(&mut self, grad_y: &Matrix, cache: BatchNormCache) -> Result<Matrix, LayerError> {
        if grad_y.shape() != cache.xhat.shape() {
            return Err(LayerError::StaleCache("batchnorm"));
        }
        let n = grad_y.rows() as f64;
        let f = self.features();
        let mut sum_dy = vec![0.0; f];
        let mut sum_dy_xhat = vec![0.0; f];
        for (gr, xr) in grad_y.iter_rows().zip(cache.xhat.iter_rows()) {
            for j in 0..f {
                sum_dy[j] += gr[j];
                sum_dy_xhat[j] += gr[j] * xr[j];
            }
        }
        for j in 0..f {
            self.beta.grad.as_mut_slice()[j] += sum_dy[j];
            self.gamma.grad.as_mut_slice()[j] += sum_dy_xhat[j];
        }
        let g = self.gamma.value.as_slice();
        let mut dx = grad_y.clone();
        for r in 0..dx.rows() {
            let xr = cache.xhat.row(r);
            for (j, v) in dx.row_mut(r).iter_mut().enumerate() {
                *v = g[j] * cache.inv_std[j] / n * (n * *v - sum_dy[j] - xr[j] * sum_dy_xhat[j]);
            }
        }
        Ok(dx)
    }
}
