use super::{LayerError, Mode};
use crate::numerics::{Matrix, Prng};

/// Inverted dropout: kept units are scaled by `1 / (1 - rate)` during
/// training so evaluation is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    rate: f64,
}

/// The scaled keep-mask drawn for one forward pass (`0` or `1 / (1 - rate)`).
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask(Option<Matrix>);

impl Dropout {
    pub fn new(rate: f64) -> Result<Self, LayerError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(LayerError::BadRate(rate));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn draw_mask(&self, rows: usize, cols: usize, rng: &mut Prng) -> DropoutMask {
        if self.rate == 0.0 {
            return DropoutMask(None);
        }
        let keep = 1.0 - self.rate;
        let scale = 1.0 / keep;
        let data = (0..rows * cols).map(|_| if rng.next_f64() < keep { scale } else { 0.0 }).collect();
        DropoutMask(Some(Matrix::from_vec(rows, cols, data).expect("sized by construction")))
    }

    pub fn forward(&self, x: &Matrix, mode: Mode, rng: &mut Prng) -> (Matrix, DropoutMask) {
        match mode {
            Mode::Eval => (x.clone(), DropoutMask(None)),
            Mode::Train => {
                let mask = self.draw_mask(x.rows(), x.cols(), rng);
                (mask.apply(x), mask)
            }
        }
    }
}

impl DropoutMask {
    pub fn identity() -> Self {
        DropoutMask(None)
    }

    /// Applies the same mask and scale; used for both directions.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        match &self.0 {
            None => x.clone(),
            Some(m) => x.hadamard(m).expect("mask drawn for this shape"),
        }
    }

    pub fn matrix(&self) -> Option<&Matrix> {
        self.0.as_ref()
    }
}
