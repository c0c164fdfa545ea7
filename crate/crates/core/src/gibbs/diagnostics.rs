//! Quantitative checks on Gibbs ensembles: the scalar gradient at the origin,
//! operator-norm tails, the second-moment bound and Herbst concentration.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{evaluate, EvalOptions, Formula};
use crate::matcore::{complex_gaussian_matrix, CMatrix, MatrixTuple, Seed, C64};

use super::ensemble::Ensemble;
use super::potential::Potential;

/// Largest `m` for the vertex enumeration in [`gradient_at_zero`].
pub const MAX_VERTEX_ARITY: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBound {
    pub radius: f64,
    /// `(1/R) max (φ - φ(0))` over the vertices of the box.
    pub bound: f64,
    /// `Σ_j |re y_j| + |im y_j|`, the support function of the unit box at `y`.
    pub pairing: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientAtZero {
    /// `y_j`, the scalar gradient of `φ` at the origin.
    pub gradient: Vec<C64>,
    pub bounds: Vec<GradientBound>,
}

/// Scalar gradient of `φ` at `0` and, for each `R`, the bound
/// `(1/R) sup (φ - φ(0))` over scalar tuples with `|re z_j|, |im z_j| ≤ R`.
///
/// Both are computed with `1×1` matrices: a unitarily invariant potential has
/// a scalar gradient at the origin, equal at every `n`. A convex function
/// attains its maximum over a box at a vertex, so the supremum is exact; the
/// box contains the polydisc of radius `R`, so the bound is also valid for it.
pub fn gradient_at_zero(pot: &Potential, radii: &[f64]) -> Result<GradientAtZero> {
    let m = pot.m();
    if m > MAX_VERTEX_ARITY {
        return Err(Error::Unsupported(format!(
            "vertex enumeration over 4^{m} points (m ≤ {MAX_VERTEX_ARITY})"
        )));
    }
    let zero = MatrixTuple::zeros(1, m);
    let (phi0, grad) = pot.value_and_gradient(&zero)?;
    let gradient: Vec<C64> = grad.mats().iter().map(|a| a.get(0, 0)).collect();
    let pairing: f64 = gradient.iter().map(|z| z.re.abs() + z.im.abs()).sum();
    let mut bounds = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
        }
        let best = (0..1usize << (2 * m))
            .into_par_iter()
            .map(|mask| {
                let z: Vec<C64> = (0..m)
                    .map(|j| {
                        let re = if mask >> (2 * j) & 1 == 1 { r } else { -r };
                        let im = if mask >> (2 * j + 1) & 1 == 1 { r } else { -r };
                        C64::new(re, im)
                    })
                    .collect();
                pot.value(&MatrixTuple::scalars(1, &z)).map(|v| v - phi0)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let bound = best / r;
        bounds.push(GradientBound {
            radius: r,
            bound,
            pairing,
            holds: pairing <= bound + 1e-12 * (1.0 + bound.abs()),
        });
    }
    Ok(GradientAtZero { gradient, bounds })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub delta: f64,
    /// `2 exp(-n δ²)`.
    pub bound: f64,
    /// Frequency of `√c ‖X_j - E X_j‖ > Θ + δ` at the calibrated `Θ`, which
    /// equals the `≥` frequency at every `Θ' > Θ`.
    pub frequency: f64,
    /// Smallest `Θ` for which this `δ` alone satisfies the bound.
    pub theta_required: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormTailReport {
    /// Infimum of the `Θ ≥ 0` making every grid point hold.
    pub theta: f64,
    pub points: Vec<TailPoint>,
    /// Number of pooled operator norms (samples × m).
    pub values: usize,
}

/// Default `δ` grid for [`norm_tail_check`].
pub fn default_tail_grid() -> Vec<f64> {
    (1..=30).map(|k| 0.1 * k as f64).collect()
}

/// Calibrates `Θ` in `P(‖X_j - E X_j‖ ≥ c^{-1/2}(Θ + δ)) ≤ 2 e^{-n δ²}` from the
/// ensemble, with the expectation replaced by the sample mean.
pub fn norm_tail_check(e: &Ensemble, c: f64, deltas: &[f64]) -> Result<NormTailReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("c = {c} must be positive")));
    }
    let mean = e.mean();
    let mut v: Vec<f64> = e
        .samples()
        .par_iter()
        .flat_map_iter(|x| {
            let d = x.sub(&mean);
            d.into_mats().into_iter().map(|a| c.sqrt() * a.operator_norm())
        })
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let total = v.len();
    let n = e.n() as f64;
    let mut theta: f64 = 0.0;
    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let bound = 2.0 * (-n * delta * delta).exp();
        let allowed = (bound * total as f64).floor() as usize;
        let required = if allowed >= total { 0.0 } else { (v[allowed] - delta).max(0.0) };
        theta = theta.max(required);
        points.push(TailPoint {
            delta,
            bound,
            frequency: 0.0,
            theta_required: required,
        });
    }
    for p in &mut points {
        let t = theta + p.delta;
        p.frequency = v.iter().filter(|&&x| x > t).count() as f64 / total as f64;
    }
    Ok(NormTailReport {
        theta,
        points,
        values: total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    /// `(E ‖X‖²)^{1/2}` over the ensemble.
    pub lhs: f64,
    /// Lower estimate of `C = sup_{‖X_j‖ ≤ 1} φ(X) - φ(0)`.
    pub c_sup: f64,
    /// `(2m/c)^{1/2} + c^{-1} C m^{1/2}`.
    pub rhs: f64,
    /// `m^{1/2}(c^{-1/2} + c^{-1} C)`, reported for comparison.
    pub rhs_unit_dimension: f64,
    pub holds: bool,
    pub samples: usize,
    /// False when the ensemble is too small for a moment estimate.
    pub sufficient: bool,
}

/// Options for the projected ascent estimating `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentOptions {
    pub starts: usize,
    pub iters: usize,
    pub seed: Seed,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            iters: 200,
            seed: Seed::new(0, 0),
        }
    }
}

fn project(x: &MatrixTuple) -> MatrixTuple {
    MatrixTuple::new(x.mats().iter().map(|a| a.clip_singular_values(1.0)).collect()).expect("same shape")
}

/// `sup φ - φ(0)` over the product of unit operator-norm balls in `M_n^m`, by
/// projected gradient ascent from several starts jointly in all slots. This
/// is a lower estimate of the supremum.
pub fn potential_sup_on_unit_ball(pot: &Potential, n: usize, opts: &AscentOptions) -> Result<f64> {
    let m = pot.m();
    let phi0 = pot.value(&MatrixTuple::zeros(n, m))?;
    let starts: Vec<MatrixTuple> = {
        let mut rng = opts.seed.rng();
        let one = C64::new(1.0, 0.0);
        let mut v = vec![
            MatrixTuple::scalars(n, &vec![one; m]),
            MatrixTuple::scalars(n, &vec![-one; m]),
        ];
        while v.len() < opts.starts.max(2) {
            let mats: Vec<CMatrix> = (0..m).map(|_| complex_gaussian_matrix(n, 1.0 / n as f64, &mut rng)).collect();
            v.push(project(&MatrixTuple::new(mats)?.scale(2.0 + rng.random::<f64>())));
        }
        v
    };
    let results: Vec<f64> = starts
        .into_par_iter()
        .map(|x0| -> Result<f64> {
            let mut x = x0;
            let (mut f, mut g) = pot.value_and_gradient(&x)?;
            let mut step = 1.0;
            for _ in 0..opts.iters {
                let mut moved = false;
                while step > 1e-10 {
                    let mut cand = x.clone();
                    cand.axpy(step, &g);
                    let cand = project(&cand);
                    let (fc, gc) = pot.value_and_gradient(&cand)?;
                    if fc > f {
                        let shift = cand.sub(&x).norm();
                        x = cand;
                        f = fc;
                        g = gc;
                        step *= 1.5;
                        moved = shift > 1e-12;
                        break;
                    }
                    step *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            Ok(f)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(results.into_iter().fold(f64::NEG_INFINITY, f64::max) - phi0)
}

/// Second-moment check `(E‖X‖²)^{1/2} ≤ (2m/c)^{1/2} + c^{-1} C m^{1/2}`.
///
/// `C` is estimated from below, which only makes the right side smaller.
pub fn expectation_bound_check(e: &Ensemble, pot: &Potential, opts: &AscentOptions) -> Result<ExpectationReport> {
    if e.m() != pot.m() {
        return Err(Error::DimensionMismatch("ensemble and potential arity differ".into()));
    }
    let c = pot.c();
    let m = pot.m() as f64;
    let lhs = e.mean_norm_sq().sqrt();
    let c_sup = potential_sup_on_unit_ball(pot, e.n(), opts)?.max(0.0);
    let rhs = (2.0 * m / c).sqrt() + c_sup * m.sqrt() / c;
    let rhs_unit_dimension = m.sqrt() * (1.0 / c.sqrt() + c_sup / c);
    let sufficient = e.len() >= 2;
    Ok(ExpectationReport {
        lhs,
        c_sup,
        rhs,
        rhs_unit_dimension,
        holds: sufficient && lhs <= rhs,
        samples: e.len(),
        sufficient,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerbstPoint {
    pub delta: f64,
    pub frequency: f64,
    /// `2 exp(-c n² δ² / 2L²)`.
    pub bound: f64,
    /// `bound + 3 (bound(1-bound)/N)^{1/2} + 1/N`.
    pub threshold: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerbstReport {
    pub lipschitz: f64,
    pub lipschitz_estimated: bool,
    pub mean: f64,
    pub points: Vec<HerbstPoint>,
    pub pass: bool,
}

/// Largest difference quotient `|f(X) - f(Y)| / ‖X - Y‖` over up to `pairs`
/// random sample pairs; a lower estimate of the Lipschitz constant.
pub fn estimate_lipschitz(values: &[f64], samples: &[MatrixTuple], pairs: usize, seed: Seed) -> f64 {
    let k = samples.len();
    if k < 2 {
        return 0.0;
    }
    let mut rng = seed.rng();
    let idx: Vec<(usize, usize)> = (0..pairs)
        .map(|_| {
            let i = rng.random_range(0..k);
            let j = (i + 1 + rng.random_range(0..k - 1)) % k;
            (i, j)
        })
        .collect();
    idx.par_iter()
        .map(|&(i, j)| {
            let d = samples[i].sub(&samples[j]).norm();
            if d > 0.0 {
                (values[i] - values[j]).abs() / d
            } else {
                0.0
            }
        })
        .reduce(|| 0.0, f64::max)
}

/// Herbst concentration `P(|f - E f| ≥ δ) ≤ 2 exp(-c n² δ² / 2L²)` on a grid
/// `δ = k L / (n √c)`, `k = 0.5, 1, …, 4`.
///
/// A grid point is violated when the empirical frequency exceeds the bound by
/// more than three binomial standard deviations plus one sample.
pub fn herbst_check(
    e: &Ensemble,
    f: &Formula,
    c: f64,
    lipschitz: Option<f64>,
    eval: &EvalOptions,
) -> Result<HerbstReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("c = {c} must be positive")));
    }
    let values: Vec<f64> = e
        .samples()
        .par_iter()
        .map(|x| evaluate(f, x, eval))
        .collect::<Result<_>>()?;
    let (l, estimated) = match lipschitz {
        Some(l) if l >= 0.0 && l.is_finite() => (l, false),
        Some(l) => return Err(Error::InvalidArgument(format!("Lipschitz constant {l}"))),
        None => (estimate_lipschitz(&values, e.samples(), 4000, eval.seed.derive(7)), true),
    };
    let total = values.len() as f64;
    let mean = values.iter().sum::<f64>() / total;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).abs()).collect();
    let n = e.n() as f64;
    let scale = if l > 0.0 { l / (n * c.sqrt()) } else { 1.0 / (n * c.sqrt()) };
    let points: Vec<HerbstPoint> = (1..=8)
        .map(|k| {
            let delta = 0.5 * k as f64 * scale;
            let bound = if l > 0.0 {
                (2.0 * (-c * n * n * delta * delta / (2.0 * l * l)).exp()).min(1.0)
            } else {
                0.0
            };
            let frequency = dev.iter().filter(|&&d| d >= delta).count() as f64 / total;
            let threshold = bound + 3.0 * (bound * (1.0 - bound) / total).sqrt() + 1.0 / total;
            HerbstPoint {
                delta,
                frequency,
                bound,
                threshold,
                violated: frequency > threshold,
            }
        })
        .collect();
    let pass = points.iter().all(|p| !p.violated);
    Ok(HerbstReport {
        lipschitz: l,
        lipschitz_estimated: estimated,
        mean,
        points,
        pass,
    })
}
