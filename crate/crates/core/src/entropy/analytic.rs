//! Closed-form reference values: semicircular entropy, the semicircle
//! log-energy, Gaussian entropies and the change-of-variables rule.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn check_variance(var: f64) -> Result<()> {
    if var > 0.0 && var.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("variance {var} must be positive")))
    }
}

/// Free entropy of a semicircular variable of variance `σ²`:
/// `½ log(2πe) + ½ log σ²`.
pub fn semicircular_entropy(var: f64) -> Result<f64> {
    check_variance(var)?;
    Ok(0.5 * (2.0 * PI * E).ln() + 0.5 * var.ln())
}

/// `∬ log|s - t| dσ(s) dσ(t)` for the semicircle law of variance `σ²`:
/// `-¼ + ½ log σ²`.
///
/// The standard semicircle has logarithmic potential `s²/4 - ½` on its
/// support, whose mean is `-¼`; rescaling adds `½ log σ²`.
pub fn log_energy_integral(var: f64) -> Result<f64> {
    check_variance(var)?;
    Ok(-0.25 + 0.5 * var.ln())
}

/// Product Gauss–Chebyshev (second kind) rule for the log-energy with `nodes`
/// and `nodes + 1` points, so that no node pair coincides.
fn chebyshev_log_energy(nodes: usize) -> f64 {
    let rule = |k: usize| -> Vec<(f64, f64)> {
        (1..=k)
            .map(|i| {
                let th = i as f64 * PI / (k + 1) as f64;
                // Semicircle on [-2, 2]: s = 2 cos θ, dσ = (2/π) sin²θ dθ.
                (2.0 * th.cos(), 2.0 / (k + 1) as f64 * th.sin().powi(2))
            })
            .collect()
    };
    let a = rule(nodes);
    let b = rule(nodes + 1);
    a.iter()
        .map(|&(s, w)| w * b.iter().map(|&(t, v)| v * (s - t).abs().ln()).sum::<f64>())
        .sum()
}

/// Two-dimensional quadrature of the log-energy for variance `σ²`.
///
/// The product Chebyshev rule converges like `1/N` because of the diagonal
/// singularity; one Richardson step on `N` and `2N` removes the leading term.
pub fn log_energy_quadrature(var: f64, nodes: usize) -> Result<f64> {
    check_variance(var)?;
    if nodes < 8 {
        return Err(Error::InvalidArgument(format!("{nodes} quadrature nodes (need ≥ 8)")));
    }
    let coarse = chebyshev_log_energy(nodes);
    let fine = chebyshev_log_energy(2 * nodes);
    Ok(2.0 * fine - coarse + 0.5 * var.ln())
}

/// Differential entropy of `N(0, Σ)` in `R^d`: `½ log((2πe)^d det Σ)`.
pub fn gaussian_entropy(cov: &DMatrix<f64>) -> Result<f64> {
    let d = cov.nrows();
    if d == 0 || cov.ncols() != d {
        return Err(Error::DimensionMismatch(format!("covariance of shape {}×{}", d, cov.ncols())));
    }
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("covariance is not positive definite".into()))?;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(0.5 * (d as f64 * (2.0 * PI * E).ln() + log_det))
}

/// Entropy after a linear change of variables: `h + log |det A|`.
pub fn entropy_linear_change(h_in: f64, a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!("map of shape {}×{}", a.nrows(), a.ncols())));
    }
    let det = a.clone().lu().determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Domain(format!("linear map is singular (det = {det})")));
    }
    Ok(h_in + det.abs().ln())
}
