//! Dense-matrix substrate: arithmetic, activations, the engine PRNG,
//! initialization, and the finite-difference gradient oracle.

mod activation;
mod gradcheck;
mod matrix;
mod prng;

use std::sync::atomic::{AtomicBool, Ordering};

pub use activation::{relu, relu_grad, sigmoid, sigmoid_grad, tanh, tanh_grad, Activation};
pub use gradcheck::{finite_diff_grad, relative_error, DEFAULT_EPS};
pub use matrix::Matrix;
pub use prng::{splitmix64, Prng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("non-finite value in {what} at ({row}, {col})")]
    NonFinite { what: String, row: usize, col: usize },
    #[error("loss function is not deterministic: {first} != {second} at the same point")]
    NonDeterministicLoss { first: f64, second: f64 },
}

static PARALLEL: AtomicBool = AtomicBool::new(false);

/// Enables row-parallel matrix products and corpus preprocessing.
///
/// Off by default (reference mode). Results are bitwise identical either way.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::Relaxed);
}

pub fn parallel_enabled() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}

/// Glorot-uniform matrix: entries in `±sqrt(6 / (rows + cols))`.
pub fn init_glorot(rows: usize, cols: usize, rng: &mut Prng) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect();
    Matrix::from_vec(rows, cols, data).expect("length matches by construction")
}
