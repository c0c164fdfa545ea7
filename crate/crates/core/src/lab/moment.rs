//! One-dimensional analogue of the quasi-moment variational problem
//! `max_ν h(ν) - C(μ, ν) - t ∫ x²/2 dν`, with `C` the optimal inner product.
//!
//! Alternating maximization: given `ν_k`, take the convex Kantorovich
//! potential `φ_k` on the `ν` side of the monotone coupling with `μ`, then set
//! `ν_{k+1} ∝ exp(-(φ_k + t x²/2))` on a grid. Since
//! `C(μ, ν) ≤ ∫ψ_k dμ + ∫φ_k dν` with equality at `ν_k`, each step cannot
//! decrease the objective.

use statrs::distribution::{ContinuousCDF, Normal};

use super::config::RunConfig;
use super::report::{Comparison, Metric, Report, Series};
use crate::convex::RealVector;
use crate::error::{Error, Result};
use crate::transport::{kantorovich_potentials_1d, Quantile1D};

pub const MAX_MOMENT_ATOMS: usize = 10_000;

/// Probability masses on the uniform grid `x_i = lo + i dx`, read as a
/// piecewise-constant density on cells of width `dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    pub lo: f64,
    pub dx: f64,
    pub mass: Vec<f64>,
}

impl GridDensity {
    /// `∝ exp(-f(x))`, normalized on the grid.
    pub fn gibbs(lo: f64, dx: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let logw: Vec<f64> = (0..points).map(|i| -f(lo + i as f64 * dx)).collect();
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::Domain("grid underflow: the Gibbs weight vanishes on the whole grid".into()));
        }
        let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Domain("grid underflow: the Gibbs normalizer is not positive".into()));
        }
        let mass: Vec<f64> = w.iter().map(|v| v / total).collect();
        let edge = mass[0].max(mass[points - 1]);
        if edge > 1e-12 {
            return Err(Error::Domain(format!("grid too narrow: boundary mass {edge:.2e}")));
        }
        Ok(Self { lo, dx, mass })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.dx
    }

    /// Differential entropy of the piecewise-constant density.
    pub fn entropy(&self) -> f64 {
        -self
            .mass
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * (p / self.dx).ln())
            .sum::<f64>()
    }

    /// `∫ x² dν` of the piecewise-constant density.
    pub fn second_moment(&self) -> f64 {
        let cell = self.dx * self.dx / 12.0;
        self.mass.iter().enumerate().map(|(i, p)| p * (self.x(i).powi(2) + cell)).sum()
    }

    /// Quantiles at the midpoints `(j + ½) / count`.
    pub fn quantiles(&self, count: usize) -> Result<Quantile1D> {
        let mut out = Vec::with_capacity(count);
        let mut cum = 0.0;
        let mut i = 0;
        for j in 0..count {
            let u = (j as f64 + 0.5) / count as f64;
            while i + 1 < self.mass.len() && cum + self.mass[i] < u {
                cum += self.mass[i];
                i += 1;
            }
            let frac = if self.mass[i] > 0.0 { ((u - cum) / self.mass[i]).clamp(0.0, 1.0) } else { 0.5 };
            out.push(self.x(i) - 0.5 * self.dx + frac * self.dx);
        }
        Quantile1D::new(out)
    }
}

/// Standard deviation of the Gaussian fixed point for `μ = N(0, 1)`:
/// the root of `σ + t σ² = 1`.
pub fn gaussian_fixed_point_sigma(t: f64) -> f64 {
    ((1.0 + 4.0 * t).sqrt() - 1.0) / (2.0 * t)
}

fn gaussian_quantiles(sigma: f64, count: usize) -> Result<Quantile1D> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Quantile1D::new((0..count).map(|j| normal.inverse_cdf((j as f64 + 0.5) / count as f64)).collect())
}

fn source_measure(cfg: &RunConfig) -> Result<Quantile1D> {
    let mu = match cfg.text("mu")? {
        "delta0" => Quantile1D::new(vec![0.0])?,
        "gaussian" => gaussian_quantiles(1.0, cfg.int("mu_atoms")?)?,
        "atoms" => Quantile1D::new(cfg.floats("atoms")?)?,
        other => return Err(Error::Config(format!("`mu` = {other}: expected delta0, gaussian or atoms"))),
    };
    if mu.len() > MAX_MOMENT_ATOMS {
        return Err(Error::Config(format!("{} atoms exceed {MAX_MOMENT_ATOMS}", mu.len())));
    }
    Ok(mu)
}

struct Iterate {
    nu: GridDensity,
    q: Quantile1D,
    objective: f64,
}

fn iterate(nu: GridDensity, mu: &Quantile1D, t: f64, qcount: usize) -> Result<Iterate> {
    let q = nu.quantiles(qcount)?;
    let inner: f64 = q.monotone_coupling(mu).iter().map(|(y, x, w)| w * x * y).sum();
    let objective = nu.entropy() - inner - 0.5 * t * nu.second_moment();
    Ok(Iterate { nu, q, objective })
}

fn next_density(it: &Iterate, mu: &Quantile1D, t: f64) -> Result<GridDensity> {
    let (phi, _) = kantorovich_potentials_1d(&it.q, mu);
    let nu = &it.nu;
    GridDensity::gibbs(nu.lo, nu.dx, nu.mass.len(), |y| phi.value(&RealVector::scalar(y)) + 0.5 * t * y * y)
}

pub fn run_moment_fixed_point(cfg: &RunConfig) -> Result<Report> {
    let mu = source_measure(cfg)?;
    let t = cfg.float("t")?;
    let iterations = cfg.int("iterations")?;
    let points = cfg.int("grid_points")?;
    let qcount = cfg.int("quantile_points")?;
    if points < 3 {
        return Err(Error::Config("`grid_points` must be at least 3".into()));
    }
    let reach = mu.support().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let half = match cfg.float("half_width")? {
        w if w > 0.0 => w,
        _ => reach / t + 12.0 / t.sqrt() + 6.0,
    };
    let dx = 2.0 * half / (points - 1) as f64;

    let start = GridDensity::gibbs(-half, dx, points, |y| 0.5 * y * y)?;
    let mut current = iterate(start, &mu, t, qcount)?;
    let mut objectives = vec![current.objective];
    let mut steps = Vec::with_capacity(iterations);
    let mut trace = Series::new("iterates", &["k", "objective", "w2_step"]);
    for k in 0..iterations {
        let next = iterate(next_density(&current, &mu, t)?, &mu, t, qcount)?;
        let step = current.q.w2(&next.q);
        trace.push(vec![k as f64, current.objective, step]);
        steps.push(step);
        objectives.push(next.objective);
        current = next;
    }
    let residual = current.q.w2(&iterate(next_density(&current, &mu, t)?, &mu, t, qcount)?.q);
    trace.push(vec![iterations as f64, current.objective, residual]);

    let mut report = Report::new(cfg);
    let min_increment = objectives.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    report.push(
        Metric::new("objective_min_increment", min_increment, Comparison::AtLeast, 0.0, "alternating-maximization monotonicity")
            .slack(cfg.float("monotone_slack")?),
    )?;
    report.push(Metric::info("objective_final", current.objective, "h(ν) - C(μ, ν) - t ∫ x²/2 dν"))?;

    // Geometric decay fit on the steps above the round-off floor.
    let floor = 1e-8 * steps.first().copied().unwrap_or(0.0) + 1e-12;
    let fit: Vec<(f64, f64)> = steps
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > floor)
        .map(|(k, s)| (k as f64, s.ln()))
        .collect();
    let predicted = if fit.len() >= 2 {
        let mk = fit.iter().map(|p| p.0).sum::<f64>() / fit.len() as f64;
        let ml = fit.iter().map(|p| p.1).sum::<f64>() / fit.len() as f64;
        let slope = fit.iter().map(|p| (p.0 - mk) * (p.1 - ml)).sum::<f64>()
            / fit.iter().map(|p| (p.0 - mk).powi(2)).sum::<f64>();
        (ml + slope * (iterations as f64 - mk)).exp()
    } else {
        steps.first().copied().unwrap_or(0.0)
    };
    report.push(
        Metric::new("terminal_residual", residual, Comparison::AtMost, 2.0 * predicted, "twice the geometric decay fit of the steps")
            .slack(floor),
    )?;

    let oracle = match cfg.text("mu")? {
        "delta0" => Some((1.0 / t.sqrt(), "maximizer N(0, 1/t) of h(ν) - t ∫ x²/2 dν")),
        "gaussian" => Some((gaussian_fixed_point_sigma(t), "Gaussian fixed point σ + tσ² = 1 (μ discretized)")),
        _ => None,
    };
    if let Some((sigma, basis)) = oracle {
        let w2 = current.q.w2(&gaussian_quantiles(sigma, qcount)?);
        report.push(
            Metric::new("gaussian_oracle_w2", w2, Comparison::AtMost, 0.0, basis).tolerance(cfg.float("w2_tolerance")?),
        )?;
    }
    report.push(Metric::info("grid_half_width", half, "density grid"))?;
    report.add_series(trace);
    let mut density = Series::new("terminal_density", &["x", "mass"]);
    for (i, p) in current.nu.mass.iter().enumerate() {
        density.push(vec![current.nu.x(i), *p]);
    }
    report.add_series(density);
    Ok(report)
}
