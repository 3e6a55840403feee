//! Finite-difference gradient checking.
//!
//! Every analytic gradient in the crate is validated against central
//! differences. The error measure is scaled-relative:
//! |a - n| / max(1, |a|, |n|), so near-zero gradient entries compare
//! absolutely while large ones compare relatively.

/// Central-difference gradient of `f` at `x` with the given step.
pub fn central_differences(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = f(&probe);
        probe[i] = orig - step;
        let minus = f(&probe);
        probe[i] = orig;
        grad.push((plus - minus) / (2.0 * step));
    }
    grad
}

/// Largest scaled-relative discrepancy between two gradient vectors.
pub fn max_scaled_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / 1f64.max(a.abs()).max(n.abs()))
        .fold(0.0, f64::max)
}
