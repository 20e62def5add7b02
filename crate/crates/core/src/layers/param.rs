use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;

/// What a parameter is for. Only kernels can carry a regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Kernel,
    Bias,
    Embedding,
    /// Batch-norm scale (gamma).
    Scale,
    /// Batch-norm shift (beta).
    Shift,
}

/// Per-tensor weight penalty `l1 * sum|w| + l2 * sum w^2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Regularizer {
    pub l1: f64,
    pub l2: f64,
}

impl Regularizer {
    pub const NONE: Regularizer = Regularizer { l1: 0.0, l2: 0.0 };

    pub fn l1(lambda: f64) -> Self {
        Self { l1: lambda, l2: 0.0 }
    }

    pub fn l2(lambda: f64) -> Self {
        Self { l1: 0.0, l2: lambda }
    }

    pub fn with_l2(self, lambda: f64) -> Self {
        Self { l2: lambda, ..self }
    }

    pub fn is_none(&self) -> bool {
        self.l1 == 0.0 && self.l2 == 0.0
    }
}

/// A trainable array with its gradient and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub kind: ParamKind,
    pub value: Matrix,
    pub grad: Matrix,
    pub m: Matrix,
    pub v: Matrix,
    pub regularizer: Regularizer,
}

impl ParamTensor {
    pub fn new(name: impl Into<String>, kind: ParamKind, value: Matrix) -> Self {
        let (r, c) = value.shape();
        Self {
            name: name.into(),
            kind,
            value,
            grad: Matrix::zeros(r, c),
            m: Matrix::zeros(r, c),
            v: Matrix::zeros(r, c),
            regularizer: Regularizer::NONE,
        }
    }

    /// Attaches a regularizer. Ignored for anything but kernels.
    pub fn regularized(mut self, reg: Regularizer) -> Self {
        if self.kind == ParamKind::Kernel {
            self.regularizer = reg;
        }
        self
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}
