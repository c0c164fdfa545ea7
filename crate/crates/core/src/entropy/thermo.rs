//! Log-partition functions by thermodynamic integration and the normalized
//! entropy of Gibbs ensembles.
//!
//! Volumes are Lebesgue measure in tr_n-orthonormal real coordinates
//! (`d = 2mn²` of them). For `μ ∝ exp(-n² φ)` the differential entropy is
//! `H = log Z + n² E φ`, and the normalized entropy is
//! `h⁽ⁿ⁾ = H / n² + 2m log n`, which equals `m log(2πe/c)` for `φ = c q`
//! at every `n`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{sample_gibbs, Ensemble, Potential, SamplerOptions};
use crate::logic::{BinaryOp, Formula};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyOptions {
    /// Gauss–Legendre nodes on `λ ∈ [0, 1]`.
    pub nodes: usize,
    /// Sampler settings per node; each node uses its own derived stream.
    pub sampler: SamplerOptions,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self {
            nodes: 16,
            sampler: SamplerOptions {
                count: 400,
                ..Default::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderNode {
    pub lambda: f64,
    pub weight: f64,
    /// `E_λ [φ_1 - φ_0]`.
    pub mean: f64,
    pub std_error: f64,
    pub acceptance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPartitionDifference {
    /// `log Z_1 - log Z_0`.
    pub value: f64,
    /// One standard error of `value`.
    pub error_bar: f64,
    pub ladder: Vec<LadderNode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub n: usize,
    pub m: usize,
    /// Normalized entropy `h⁽ⁿ⁾` in nats.
    pub h_n: f64,
    /// `log Z` in tr_n-orthonormal coordinates.
    pub log_z: f64,
    /// `E φ` under the Gibbs measure.
    pub mean_potential: f64,
    /// One standard error of `h_n`.
    pub error_bar: f64,
    pub ladder: Vec<LadderNode>,
}

/// Nodes and weights of the `k`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> Vec<(f64, f64)> {
    (0..k)
        .map(|i| {
            // Newton iteration from the Chebyshev-like initial guess.
            let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=k {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pk = if k == 0 { 1.0 } else if k == 1 { x } else { p1 };
                let pkm1 = if k == 1 { 1.0 } else { p0 };
                dp = k as f64 * (x * pk - pkm1) / (x * x - 1.0);
                let dx = pk / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn interpolate(a: &Potential, b: &Potential, lambda: f64) -> Result<Potential> {
    // (1-λ) a + λ b = a + λ (b - a).
    let diff = Formula::binary(BinaryOp::Sub, b.formula().clone(), a.formula().clone());
    let f = Formula::binary(
        BinaryOp::Add,
        a.formula().clone(),
        Formula::binary(BinaryOp::Mul, Formula::Const(lambda), diff),
    );
    Potential::new(f, (1.0 - lambda) * a.c() + lambda * b.c(), a.m())
}

fn mean_and_error(values: &[f64], ess: f64) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / ess.clamp(1.0, k)).sqrt())
}

fn ensemble_ess(e: &Ensemble) -> f64 {
    e.meta().diagnostics.as_ref().map_or(e.len() as f64, |d| d.ess)
}

/// `log Z_b - log Z_a` along `φ_λ = (1-λ) a + λ b`, using
/// `d/dλ log Z_λ = -n² E_λ[b - a]` and Gauss–Legendre quadrature in `λ`.
pub fn log_partition_difference(
    a: &Potential,
    b: &Potential,
    n: usize,
    opts: &EntropyOptions,
) -> Result<LogPartitionDifference> {
    if a.m() != b.m() {
        return Err(Error::DimensionMismatch("potentials of different arity".into()));
    }
    if opts.nodes == 0 {
        return Err(Error::InvalidArgument("at least one ladder node".into()));
    }
    let n2 = (n * n) as f64;
    let ladder: Vec<LadderNode> = gauss_legendre(opts.nodes)
        .into_par_iter()
        .enumerate()
        .map(|(i, (x, w))| -> Result<LadderNode> {
            let lambda = 0.5 * (x + 1.0);
            let pot = interpolate(a, b, lambda)?;
            let sampler = SamplerOptions {
                seed: opts.sampler.seed.derive(i as u64),
                ..opts.sampler.clone()
            };
            let e = sample_gibbs(&pot, n, &sampler)?;
            let diffs: Vec<f64> = e
                .samples()
                .iter()
                .map(|s| Ok(b.value(s)? - a.value(s)?))
                .collect::<Result<_>>()?;
            let (mean, std_error) = mean_and_error(&diffs, ensemble_ess(&e));
            Ok(LadderNode {
                lambda,
                weight: 0.5 * w,
                mean,
                std_error,
                acceptance: e.meta().diagnostics.as_ref().map_or(f64::NAN, |d| d.acceptance),
            })
        })
        .collect::<Result<_>>()?;
    let integral: f64 = ladder.iter().map(|l| l.weight * l.mean).sum();
    let err = ladder.iter().map(|l| (l.weight * l.std_error).powi(2)).sum::<f64>().sqrt();
    Ok(LogPartitionDifference {
        value: -n2 * integral,
        error_bar: n2 * err,
        ladder,
    })
}

/// `log Z` of `exp(-n² (c/2)‖X‖²)` over `M_n^m`: `mn² log(2π / (n² c))`.
pub fn gaussian_log_partition(n: usize, m: usize, c: f64) -> f64 {
    let n2 = (n * n) as f64;
    m as f64 * n2 * (2.0 * PI / (n2 * c)).ln()
}

/// Normalized entropy `h⁽ⁿ⁾` of the Gibbs measure of `pot` on `M_n^m`,
/// integrating from the Gaussian `(c/2)‖X‖²` with the potential's own `c`.
pub fn gibbs_entropy(pot: &Potential, n: usize, opts: &EntropyOptions) -> Result<EntropyReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let m = pot.m();
    let c = pot.c();
    let reference = Potential::quadratic(m, c)?;
    let diff = log_partition_difference(&reference, pot, n, opts)?;
    let log_z = gaussian_log_partition(n, m, c) + diff.value;

    let sampler = SamplerOptions {
        seed: opts.sampler.seed.derive(opts.nodes as u64),
        ..opts.sampler.clone()
    };
    let e = sample_gibbs(pot, n, &sampler)?;
    let values: Vec<f64> = e.samples().iter().map(|s| pot.value(s)).collect::<Result<_>>()?;
    let (mean_potential, se) = mean_and_error(&values, ensemble_ess(&e));

    let n2 = (n * n) as f64;
    let h_n = log_z / n2 + mean_potential + 2.0 * m as f64 * (n as f64).ln();
    let error_bar = ((diff.error_bar / n2).powi(2) + se * se).sqrt();
    if !h_n.is_finite() {
        return Err(Error::NonFinite("normalized entropy".into()));
    }
    Ok(EntropyReport {
        n,
        m,
        h_n,
        log_z,
        mean_potential,
        error_bar,
        ladder: diff.ladder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for k in [1, 2, 5, 16] {
            let rule = gauss_legendre(k);
            let total: f64 = rule.iter().map(|p| p.1).sum();
            assert!((total - 2.0).abs() < 1e-13);
            // Exact for degree 2k - 1.
            let deg = 2 * k - 2;
            let got: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((got - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn gaussian_partition_matches_entropy_identity() {
        // H = log Z + n² E φ with E (c/2)‖X‖² = m.
        let (n, m, c) = (5, 2, 3.0);
        let h = gaussian_log_partition(n, m, c) / (n * n) as f64 + m as f64 + 2.0 * m as f64 * (n as f64).ln();
        assert!((h - m as f64 * (2.0 * PI * std::f64::consts::E / c).ln()).abs() < 1e-12);
    }
}
