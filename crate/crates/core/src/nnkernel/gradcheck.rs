//! Central finite-difference gradient checking.

/// Gradients smaller than this are compared in absolute terms.
pub const ABS_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(ABS_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Central differences of a scalar function at `point`.
pub fn numerical_gradient(mut f: impl FnMut(&[f64]) -> f64, point: &[f64], eps: f64) -> Vec<f64> {
    let mut x = point.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + eps;
            let up = f(&x);
            x[i] = orig - eps;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Worst relative deviation between `analytic` and central differences of
/// `f` over every coordinate of `point`.
pub fn finite_difference_check(
    f: impl FnMut(&[f64]) -> f64,
    point: &[f64],
    analytic: &[f64],
    eps: f64,
) -> f64 {
    assert_eq!(point.len(), analytic.len(), "gradient length mismatch");
    numerical_gradient(f, point, eps)
        .iter()
        .zip(analytic)
        .map(|(&n, &a)| relative_error(a, n))
        .fold(0.0, f64::max)
}
