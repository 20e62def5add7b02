use super::{Matrix, NumericsError};

pub const DEFAULT_EPS: f64 = 1e-5;

/// Central-difference gradient of `loss` at `at`, one entry at a time.
///
/// `loss` must be a pure function of its argument: it is evaluated twice at
/// the unperturbed point first and must agree exactly with itself.
pub fn finite_diff_grad<F>(mut loss: F, at: &Matrix, eps: f64) -> Result<Matrix, NumericsError>
where
    F: FnMut(&Matrix) -> f64,
{
    let first = loss(at);
    let second = loss(at);
    if first.to_bits() != second.to_bits() && !(first.is_nan() && second.is_nan()) {
        return Err(NumericsError::NonDeterministicLoss { first, second });
    }
    let mut grad = Matrix::zeros(at.rows(), at.cols());
    let mut probe = at.clone();
    for i in 0..at.len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + eps;
        let plus = loss(&probe);
        probe.as_mut_slice()[i] = orig - eps;
        let minus = loss(&probe);
        probe.as_mut_slice()[i] = orig;
        grad.as_mut_slice()[i] = (plus - minus) / (2.0 * eps);
    }
    Ok(grad)
}

/// `max|analytic - numeric| / max(1, max|analytic|)`.
pub fn relative_error(analytic: &Matrix, numeric: &Matrix) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape(), "gradient shapes differ");
    let diff = analytic.as_slice().iter().zip(numeric.as_slice()).fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    diff / analytic.max_abs().max(1.0)
}
