//! Entropically regularized transport between uniform empirical measures,
//! iterated in the log domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkhornOptions {
    /// Regularization; `None` means `0.01 ×` the median cost.
    pub epsilon: Option<f64>,
    pub max_iter: usize,
    /// Stop once the row marginals are within this `ℓ¹` distance.
    pub tol: f64,
    /// Anneal from the largest cost down to `epsilon`, halving each stage.
    pub epsilon_scaling: bool,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self {
            epsilon: None,
            max_iter: 100_000,
            tol: 1e-5,
            epsilon_scaling: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkhornResult {
    /// `Σ P_ij C_ij` for the regularized plan `P`.
    pub cost: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// Dense `rows × cols` plan, row-major.
    pub plan: Vec<f64>,
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        0.0
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Sinkhorn iterations for uniform marginals on a `rows × cols` cost matrix.
pub fn sinkhorn(cost: &[f64], rows: usize, cols: usize, opts: &SinkhornOptions) -> Result<SinkhornResult> {
    if rows == 0 || cols == 0 || cost.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "cost of length {} for {rows}×{cols}",
            cost.len()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("transport cost".into()));
    }
    let eps = match opts.epsilon {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::InvalidArgument(format!("epsilon = {e}"))),
        None => {
            let m = 0.01 * median(cost);
            if m > 0.0 {
                m
            } else {
                // Degenerate costs: fall back to a scale from the largest entry.
                1e-3 * cost.iter().copied().fold(0.0, f64::max).max(1e-12)
            }
        }
    };
    let mut schedule = Vec::new();
    if opts.epsilon_scaling {
        let mut e = cost.iter().copied().fold(0.0, f64::max);
        while e > 2.0 * eps {
            schedule.push(e);
            e *= 0.5;
        }
    }
    schedule.push(eps);

    let mut f = vec![0.0; rows];
    let mut g = vec![0.0; cols];
    let mut iterations = 0;
    let last = schedule.len() - 1;
    for (stage, &e) in schedule.iter().enumerate() {
        let tol = if stage == last { opts.tol } else { opts.tol.max(1e-3) };
        let budget = opts.max_iter.saturating_sub(iterations);
        iterations += sinkhorn_stage(cost, rows, cols, e, tol, budget, &mut f, &mut g)
            .map_err(|e| match e {
                Error::NonConvergence(_) => Error::NonConvergence(format!(
                    "Sinkhorn did not reach marginal tolerance {} in {} iterations (epsilon {eps:.3e})",
                    opts.tol, opts.max_iter
                )),
                other => other,
            })?;
    }
    let plan: Vec<f64> = (0..rows * cols)
        .map(|k| plan_entry(cost, cols, eps, rows, &f, &g, k / cols, k % cols))
        .collect();
    let total = plan.iter().zip(cost).map(|(p, c)| p * c).sum();
    Ok(SinkhornResult {
        cost: total,
        epsilon: eps,
        iterations,
        plan,
    })
}

#[allow(clippy::too_many_arguments)]
fn plan_entry(cost: &[f64], cols: usize, eps: f64, rows: usize, f: &[f64], g: &[f64], i: usize, j: usize) -> f64 {
    ((f[i] + g[j] - cost[i * cols + j]) / eps - (rows as f64).ln() - (cols as f64).ln()).exp()
}

/// Alternating log-domain updates at fixed `eps` until the row marginals are
/// within `tol`; returns the number of sweeps.
#[allow(clippy::too_many_arguments)]
fn sinkhorn_stage(
    cost: &[f64],
    rows: usize,
    cols: usize,
    eps: f64,
    tol: f64,
    budget: usize,
    f: &mut [f64],
    g: &mut [f64],
) -> Result<usize> {
    let log_a = -(rows as f64).ln();
    let log_b = -(cols as f64).ln();
    for it in 1..=budget {
        for i in 0..rows {
            f[i] = -eps * log_sum_exp((0..cols).map(|j| (g[j] - cost[i * cols + j]) / eps + log_b));
        }
        for j in 0..cols {
            g[j] = -eps * log_sum_exp((0..rows).map(|i| (f[i] - cost[i * cols + j]) / eps + log_a));
        }
        // Columns are exact after the g-update; measure the row error.
        let err: f64 = (0..rows)
            .map(|i| {
                let s: f64 = (0..cols).map(|j| plan_entry(cost, cols, eps, rows, f, g, i, j)).sum();
                (s - 1.0 / rows as f64).abs()
            })
            .sum();
        if !err.is_finite() {
            return Err(Error::NonFinite("Sinkhorn potentials".into()));
        }
        if err <= tol {
            return Ok(it);
        }
    }
    Err(Error::NonConvergence(String::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginals_are_uniform() {
        let cost = [0.0, 1.0, 4.0, 1.0, 0.0, 1.0];
        let r = sinkhorn(&cost, 2, 3, &SinkhornOptions { epsilon: Some(0.5), ..Default::default() }).unwrap();
        for i in 0..2 {
            let s: f64 = r.plan[i * 3..i * 3 + 3].iter().sum();
            assert!((s - 0.5).abs() < 1e-5);
        }
        for j in 0..3 {
            let s: f64 = (0..2).map(|i| r.plan[i * 3 + j]).sum();
            assert!((s - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_epsilon_approaches_assignment() {
        let cost = [0.0, 4.0, 4.0, 0.0];
        let r = sinkhorn(&cost, 2, 2, &SinkhornOptions { epsilon: Some(0.05), ..Default::default() }).unwrap();
        assert!(r.cost < 1e-6);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
