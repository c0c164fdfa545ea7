//! Inf-convolution (Hopf-Lax) and the Legendre transform of strongly convex
//! functions.
//!
//! Both reduce to the proximal problem `min_y φ(y) + ‖x - y‖²/2t`, solved by
//! the damped fixed-point iteration `y ← y + θ(x - t∇φ(y) - y)`. When a damped
//! step fails to decrease the objective, or the residual stops contracting,
//! the step length along the same direction is found by bisection on the
//! directional derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::function::ScalarFn;
use super::space::InnerSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxOptions {
    pub max_iter: usize,
    /// Stop once `‖x - t∇φ(y) - y‖ ≤ tol (1 + ‖x‖)`.
    pub tol: f64,
    /// Fixed-point damping `θ ∈ (0, 1]`.
    pub damping: f64,
    /// Optional bound on `‖y - x‖`; leaving it is reported as divergence.
    pub search_radius: Option<f64>,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-12,
            damping: 0.5,
            search_radius: None,
        }
    }
}

impl ProxOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0
            || !(self.tol > 0.0 && self.tol.is_finite())
            || !(self.damping > 0.0 && self.damping <= 1.0)
            || self.search_radius.is_some_and(|r| !(r > 0.0))
        {
            return Err(Error::InvalidArgument(format!("bad prox options {self:?}")));
        }
        Ok(())
    }
}

/// Minimizer and minimum of `φ(y) + ‖x - y‖²/2t`.
#[derive(Clone, Debug)]
pub struct Prox<P> {
    pub value: f64,
    pub argmin: P,
    pub iterations: usize,
}

enum Failure {
    Diverged(f64),
    Budget(f64),
    NonFinite,
}

fn failure_to_error(f: Failure) -> Error {
    match f {
        Failure::Diverged(r) => {
            Error::NonConvergence(format!("proximal iterate left the search region (|y - x| = {r:.3e})"))
        }
        Failure::Budget(res) => {
            Error::NonConvergence(format!("proximal iteration budget exhausted (residual {res:.3e})"))
        }
        Failure::NonFinite => Error::NonFinite("proximal objective".into()),
    }
}

/// Step along `d` minimizing the convex `α ↦ F(y + αd)` on `[0, 1]`, located
/// by bisection on the sign of the directional derivative `h`.
fn bisect_step(h: impl Fn(f64) -> f64) -> f64 {
    if h(1.0) <= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn prox_inner<P: InnerSpace>(
    phi: &ScalarFn<P>,
    t: f64,
    x: &P,
    opts: &ProxOptions,
) -> std::result::Result<Prox<P>, Failure> {
    let obj = |y: &P| phi.value(y) + y.sub(x).norm_sq() / (2.0 * t);
    let scale = 1.0 + x.norm();
    let cap = opts.search_radius.unwrap_or(1e8 * scale);
    let mut y = x.clone();
    let mut fy = obj(&y);
    let mut prev_residual = f64::INFINITY;
    for it in 0..opts.max_iter {
        let g = phi.gradient(&y).expect("checked by caller");
        let mut d = x.clone();
        d.axpy(-t, &g);
        d.axpy(-1.0, &y);
        let residual = d.norm();
        if !residual.is_finite() || !fy.is_finite() {
            return Err(Failure::NonFinite);
        }
        if residual <= opts.tol * scale {
            return Ok(Prox { value: fy, argmin: y, iterations: it });
        }
        let mut moved = false;
        if residual <= 0.5 * prev_residual {
            let mut cand = y.clone();
            cand.axpy(opts.damping, &d);
            let fc = obj(&cand);
            if fc < fy {
                y = cand;
                fy = fc;
                moved = true;
            }
        }
        if !moved {
            let alpha = bisect_step(|a| {
                let mut p = y.clone();
                p.axpy(a, &d);
                let mut grad = phi.gradient(&p).expect("checked by caller");
                grad.axpy(1.0 / t, &p.sub(x));
                grad.inner(&d)
            });
            if alpha * residual <= 4.0 * f64::EPSILON * scale {
                // No progress possible along the residual: y is optimal to
                // working precision, or sits at a kink of φ.
                return Ok(Prox { value: fy, argmin: y, iterations: it });
            }
            y.axpy(alpha, &d);
            fy = obj(&y);
        }
        prev_residual = residual;
        let dist = y.sub(x).norm();
        if !(dist <= cap) {
            return Err(Failure::Diverged(dist));
        }
    }
    let g = phi.gradient(&y).expect("checked by caller");
    let mut d = x.clone();
    d.axpy(-t, &g);
    d.axpy(-1.0, &y);
    Err(Failure::Budget(d.norm()))
}

fn require_gradient<P: InnerSpace>(phi: &ScalarFn<P>) -> Result<()> {
    if phi.has_gradient() {
        Ok(())
    } else {
        Err(Error::Unsupported("proximal iteration needs a (sub)gradient".into()))
    }
}

/// Solves `min_y φ(y) + ‖x - y‖²/2t` for convex `φ` with a (sub)gradient.
pub fn prox<P: InnerSpace>(phi: &ScalarFn<P>, t: f64, x: &P, opts: &ProxOptions) -> Result<Prox<P>> {
    opts.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time t = {t} must be positive")));
    }
    require_gradient(phi)?;
    prox_inner(phi, t, x, opts).map_err(failure_to_error)
}

/// `φ_t(x) = inf_y [φ(y) + ‖x - y‖²/2t]`.
pub fn inf_convolution<P: InnerSpace>(phi: &ScalarFn<P>, t: f64, x: &P, opts: &ProxOptions) -> Result<f64> {
    prox(phi, t, x, opts).map(|p| p.value)
}

/// `φ_t` as a function, with gradient `(x - prox(x))/t`.
///
/// Curvature bounds follow the Hopf-Lax rules: `c ↦ c/(1 + tc)` and
/// `K ↦ K/(1 + tK)` (so `1/t` when `K = ∞`). Evaluation failures yield NaN,
/// which the midpoint checks report as a violation.
pub fn inf_convolution_fn<P: InnerSpace>(phi: &ScalarFn<P>, t: f64, opts: &ProxOptions) -> Result<ScalarFn<P>> {
    opts.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time t = {t} must be positive")));
    }
    require_gradient(phi)?;
    let (f, g, o) = (phi.clone(), phi.clone(), *opts);
    let c = phi.convexity / (1.0 + t * phi.convexity);
    let k = if phi.semiconcavity.is_infinite() {
        1.0 / t
    } else {
        phi.semiconcavity / (1.0 + t * phi.semiconcavity)
    };
    Ok(ScalarFn::new(move |x: &P| prox_inner(&f, t, x, &o).map_or(f64::NAN, |p| p.value))
        .with_gradient(move |x: &P| match prox_inner(&g, t, x, &o) {
            Ok(p) => x.sub(&p.argmin).scale(1.0 / t),
            Err(_) => x.scale(f64::NAN),
        })
        .with_bounds(c, k))
}

fn legendre_prox<P: InnerSpace>(phi: &ScalarFn<P>, y: &P, opts: &ProxOptions) -> Result<(f64, P)> {
    let c = phi.convexity;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Legendre transform needs a positive convexity constant, got {c}"
        )));
    }
    require_gradient(phi)?;
    opts.validate()?;
    let tilde = phi.add_quadratic(1.0, -c);
    let p = prox_inner(&tilde, 1.0 / c, &y.scale(1.0 / c), opts).map_err(|e| match e {
        Failure::Diverged(_) => Error::InvalidArgument(format!(
            "invalid convexity constant {c}: the inner inf-convolution diverged"
        )),
        other => failure_to_error(other),
    })?;
    Ok((0.5 * y.norm_sq() / c - p.value, p.argmin))
}

/// `ℒφ(y) = sup_x [⟨x, y⟩ - φ(x)]` for `φ` with declared convexity `c > 0`,
/// through `ℒφ(y) = ‖y‖²/2c - φ̃_{1/c}(y/c)` with `φ̃ = φ - c q`.
pub fn legendre_strongly_convex<P: InnerSpace>(phi: &ScalarFn<P>, y: &P, opts: &ProxOptions) -> Result<f64> {
    legendre_prox(phi, y, opts).map(|(v, _)| v)
}

/// `ℒφ` as a function. Its gradient at `y` is the maximizer `x`; it is
/// `1/c`-semiconcave and `1/K`-convex.
pub fn legendre_fn<P: InnerSpace>(phi: &ScalarFn<P>, opts: &ProxOptions) -> Result<ScalarFn<P>> {
    // Surface argument errors now rather than as NaN later.
    if !(phi.convexity > 0.0 && phi.convexity.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Legendre transform needs a positive convexity constant, got {}",
            phi.convexity
        )));
    }
    require_gradient(phi)?;
    opts.validate()?;
    let (f, g, o) = (phi.clone(), phi.clone(), *opts);
    let convexity = if phi.semiconcavity > 0.0 { 1.0 / phi.semiconcavity } else { 0.0 };
    Ok(ScalarFn::new(move |y: &P| legendre_prox(&f, y, &o).map_or(f64::NAN, |r| r.0))
        .with_gradient(move |y: &P| match legendre_prox(&g, y, &o) {
            Ok((_, x)) => x,
            Err(_) => y.scale(f64::NAN),
        })
        .with_bounds(convexity, 1.0 / phi.convexity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::space::RealVector;

    fn rv(v: &[f64]) -> RealVector {
        RealVector(v.to_vec())
    }

    #[test]
    fn zero_function_gives_zero() {
        let zero = ScalarFn::affine(rv(&[0.0, 0.0]), 0.0);
        for t in [0.1, 1.0, 7.0] {
            let v = inf_convolution(&zero, t, &rv(&[3.0, -1.0]), &ProxOptions::default()).unwrap();
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_quadratic_closed_form() {
        let x = rv(&[1.5, -0.5]);
        for c in [0.3, 1.0, 5.0] {
            for t in [0.2, 1.0, 3.0] {
                let f = ScalarFn::scaled_quadratic(c);
                let v = inf_convolution(&f, t, &x, &ProxOptions::default()).unwrap();
                let want = c * x.norm_sq() / (2.0 * (1.0 + c * t));
                assert!((v - want).abs() < 1e-11, "c={c} t={t}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn linear_function_closed_form() {
        let a = rv(&[2.0, -1.0]);
        let x = rv(&[0.3, 0.7]);
        let f = ScalarFn::affine(a.clone(), 0.0);
        let v = inf_convolution(&f, 0.8, &x, &ProxOptions::default()).unwrap();
        assert!((v - (a.inner(&x) - 0.4 * a.norm_sq())).abs() < 1e-11);
    }

    #[test]
    fn missing_gradient_is_unsupported() {
        let f = ScalarFn::new(|x: &RealVector| x.norm_sq());
        assert!(matches!(
            inf_convolution(&f, 1.0, &rv(&[1.0]), &ProxOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn legendre_of_quadratics() {
        let y = rv(&[0.4, -2.0]);
        let q = ScalarFn::quadratic();
        let v = legendre_strongly_convex(&q, &y, &ProxOptions::default()).unwrap();
        assert!((v - 0.5 * y.norm_sq()).abs() < 1e-11);
        let f = ScalarFn::scaled_quadratic(4.0);
        let v = legendre_strongly_convex(&f, &y, &ProxOptions::default()).unwrap();
        assert!((v - y.norm_sq() / 8.0).abs() < 1e-11);
    }

    #[test]
    fn legendre_of_shifted_quadratic() {
        let a = rv(&[1.0, 2.0]);
        let q = ScalarFn::quadratic();
        let lin = ScalarFn::affine(a.clone(), 0.0);
        let (q2, l2) = (q.clone(), lin.clone());
        let phi = ScalarFn::new(move |x: &RealVector| q.value(x) + lin.value(x))
            .with_gradient(move |x| q2.gradient(x).unwrap().add(&l2.gradient(x).unwrap()))
            .with_bounds(1.0, 1.0);
        let y = rv(&[-0.5, 3.0]);
        let v = legendre_strongly_convex(&phi, &y, &ProxOptions::default()).unwrap();
        assert!((v - 0.5 * y.sub(&a).norm_sq()).abs() < 1e-11);
    }

    #[test]
    fn nonconvex_function_diverges() {
        // -x² declared 1-convex: the Legendre sup is +∞.
        let f = ScalarFn::new(|x: &RealVector| -x.norm_sq())
            .with_gradient(|x| x.scale(-2.0))
            .with_bounds(1.0, 1.0);
        let r = legendre_strongly_convex(&f, &rv(&[1.0]), &ProxOptions::default());
        assert!(matches!(r, Err(Error::InvalidArgument(_))), "{r:?}");
    }

    #[test]
    fn nonsmooth_prox_of_abs() {
        // Soft thresholding: prox of |y| at time t.
        let f = ScalarFn::new(|x: &RealVector| x.0[0].abs())
            .with_gradient(|x| RealVector::scalar(x.0[0].signum()));
        for (x, want) in [(3.0, 2.0), (-0.5, 0.0), (1.2, 0.2)] {
            let p = prox(&f, 1.0, &RealVector::scalar(x), &ProxOptions::default()).unwrap();
            assert!((p.argmin.0[0] - want).abs() < 1e-9, "x={x}: {:?}", p.argmin);
        }
    }

    #[test]
    fn stiff_quadratic_converges() {
        let f = ScalarFn::new(|x: &RealVector| 0.5 * (x.0[0].powi(2) + 400.0 * x.0[1].powi(2)))
            .with_gradient(|x| rv(&[x.0[0], 400.0 * x.0[1]]));
        let x = rv(&[1.0, 1.0]);
        let t = 0.7;
        let v = inf_convolution(&f, t, &x, &ProxOptions::default()).unwrap();
        let want = 0.5 * (1.0 / (1.0 + t) + 400.0 / (1.0 + 400.0 * t));
        assert!((v - want).abs() < 1e-10);
    }

    #[test]
    fn bad_time_rejected() {
        let q = ScalarFn::<RealVector>::quadratic();
        assert!(inf_convolution(&q, 0.0, &rv(&[1.0]), &ProxOptions::default()).is_err());
    }
}
