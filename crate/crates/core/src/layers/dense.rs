use super::{LayerError, ParamKind, ParamTensor, Regularizer};
use crate::numerics::{init_glorot, Activation, Matrix, Prng};

/// Fully connected layer `y = act(x W + b)`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: ParamTensor,
    pub b: ParamTensor,
    pub activation: Activation,
}

#[derive(Debug)]
pub struct DenseCache {
    x: Matrix,
    pre: Matrix,
}

impl DenseCache {
    /// `x W + b` from the forward pass.
    pub fn pre_activation(&self) -> &Matrix {
        &self.pre
    }
}

impl Dense {
    pub fn new(name: &str, inputs: usize, outputs: usize, activation: Activation, rng: &mut Prng) -> Self {
        let w = init_glorot(inputs, outputs, rng);
        Self::from_parts(name, w, Matrix::zeros(1, outputs), activation).expect("consistent shapes")
    }

    pub fn from_parts(name: &str, w: Matrix, b: Matrix, activation: Activation) -> Result<Self, LayerError> {
        if b.shape() != (1, w.cols()) {
            return Err(LayerError::Shape(format!("dense W {:?} b {:?}", w.shape(), b.shape())));
        }
        Ok(Self {
            w: ParamTensor::new(format!("{name}.W"), ParamKind::Kernel, w),
            b: ParamTensor::new(format!("{name}.b"), ParamKind::Bias, b),
            activation,
        })
    }

    pub fn with_regularizer(mut self, reg: Regularizer) -> Self {
        self.w.regularizer = reg;
        self
    }

    pub fn inputs(&self) -> usize {
        self.w.value.rows()
    }

    pub fn outputs(&self) -> usize {
        self.w.value.cols()
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn pre_activation(&self, x: &Matrix) -> Result<Matrix, LayerError> {
        let mut z = x.matmul(&self.w.value)?;
        z.add_row_assign(self.b.value.as_slice())?;
        Ok(z)
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix, LayerError> {
        let act = self.activation;
        Ok(self.pre_activation(x)?.map(|v| act.apply(v)))
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, DenseCache), LayerError> {
        let pre = self.pre_activation(x)?;
        let act = self.activation;
        let y = pre.map(|v| act.apply(v));
        Ok((y, DenseCache { x: x.clone(), pre }))
    }

    /// Backward from `dL/dy`. Regularizer terms are added separately.
    pub fn backward(&mut self, grad_y: &Matrix, cache: DenseCache) -> Result<Matrix, LayerError> {
        let act = self.activation;
        let dz = grad_y.zip_map(&cache.pre, "dense_backward", |g, z| g * act.derivative(z))?;
        self.backward_pre(&dz, cache)
    }

    /// Backward from `dL/dz` where `z` is the pre-activation. Used by the
    /// fused sigmoid + cross-entropy output path.
    pub fn backward_pre(&mut self, grad_z: &Matrix, cache: DenseCache) -> Result<Matrix, LayerError> {
        if grad_z.shape() != cache.pre.shape() {
            return Err(LayerError::StaleCache("dense"));
        }
        self.w.grad.add_assign(&cache.x.t_matmul(grad_z)?)?;
        for (acc, s) in self.b.grad.as_mut_slice().iter_mut().zip(grad_z.col_sums()) {
            *acc += s;
        }
        Ok(grad_z.matmul_t(&self.w.value)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_layer() {
        let d = Dense::from_parts("d", Matrix::identity(3), Matrix::zeros(1, 3), Activation::Linear).unwrap();
        let x = Matrix::from_rows(&[[1.0, -2.0, 3.5]]).unwrap();
        assert_eq!(d.infer(&x).unwrap(), x);
    }

    #[test]
    fn relu_backward_zeroes_inactive_units() {
        let w = Matrix::from_rows(&[[1.0, -1.0]]).unwrap();
        let mut d = Dense::from_parts("d", w, Matrix::zeros(1, 2), Activation::Relu).unwrap();
        let x = Matrix::from_rows(&[[2.0], [0.0]]).unwrap();
        let (_, cache) = d.forward(&x).unwrap();
        d.backward(&Matrix::filled(2, 2, 1.0), cache).unwrap();
        // unit 1 has pre-activation -2 and 0: never active
        assert_eq!(d.b.grad.as_slice(), &[1.0, 0.0]);
        assert_eq!(d.w.grad.as_slice(), &[2.0, 0.0]);
    }
}
