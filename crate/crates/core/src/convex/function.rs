//! Scalar functions with declared curvature bounds, and midpoint checks of
//! those bounds.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matcore::Seed;

use super::space::{InnerSpace, RealVector};

type ValueFn<P> = Arc<dyn Fn(&P) -> f64 + Send + Sync>;
type GradFn<P> = Arc<dyn Fn(&P) -> P + Send + Sync>;

/// A real function on an inner-product space.
///
/// `convexity` is a lower curvature bound `c ≥ 0` (`f - c q` convex, with
/// `q = ½‖·‖²`); `semiconcavity` is an upper bound `K` (`K q - f` convex),
/// `f64::INFINITY` when unknown. Callables must be pure.
pub struct ScalarFn<P> {
    value: ValueFn<P>,
    grad: Option<GradFn<P>>,
    pub convexity: f64,
    pub semiconcavity: f64,
}

impl<P> Clone for ScalarFn<P> {
    fn clone(&self) -> Self {
        Self {
            value: Arc::clone(&self.value),
            grad: self.grad.clone(),
            convexity: self.convexity,
            semiconcavity: self.semiconcavity,
        }
    }
}

impl<P> fmt::Debug for ScalarFn<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFn")
            .field("has_gradient", &self.grad.is_some())
            .field("convexity", &self.convexity)
            .field("semiconcavity", &self.semiconcavity)
            .finish()
    }
}

impl<P: InnerSpace> ScalarFn<P> {
    /// A function with no declared curvature (`c = 0`, `K = ∞`).
    pub fn new(value: impl Fn(&P) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            grad: None,
            convexity: 0.0,
            semiconcavity: f64::INFINITY,
        }
    }

    /// Attach a (sub)gradient.
    pub fn with_gradient(mut self, grad: impl Fn(&P) -> P + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_bounds(mut self, convexity: f64, semiconcavity: f64) -> Self {
        self.convexity = convexity;
        self.semiconcavity = semiconcavity;
        self
    }

    /// `q(x) = ½‖x‖²`, which is 1-convex and 1-semiconcave.
    pub fn quadratic() -> Self {
        Self::scaled_quadratic(1.0)
    }

    /// `(c/2)‖x‖²`.
    pub fn scaled_quadratic(c: f64) -> Self {
        Self::new(move |x: &P| 0.5 * c * x.norm_sq())
            .with_gradient(move |x: &P| x.scale(c))
            .with_bounds(c.max(0.0), c.max(0.0))
    }

    /// `x ↦ ⟨a, x⟩ + b`.
    pub fn affine(a: P, b: f64) -> Self {
        let g = a.clone();
        Self::new(move |x: &P| a.inner(x) + b)
            .with_gradient(move |_: &P| g.clone())
            .with_bounds(0.0, 0.0)
    }

    pub fn value(&self, x: &P) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &P) -> Option<P> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// `a f + b q`, with bounds combined accordingly (`a ≥ 0`).
    pub fn add_quadratic(&self, a: f64, b: f64) -> Self {
        let f = self.clone();
        let g = self.clone();
        let mut out = Self::new(move |x: &P| a * f.value(x) + 0.5 * b * x.norm_sq());
        if self.has_gradient() {
            out = out.with_gradient(move |x: &P| {
                let mut d = g.gradient(x).expect("gradient present").scale(a);
                d.axpy(b, x);
                d
            });
        }
        out.with_bounds(
            (a * self.convexity + b).max(0.0),
            a * self.semiconcavity + b,
        )
    }
}

/// Largest violation of a midpoint inequality over a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// Largest `lhs - rhs`; positive means the inequality failed somewhere.
    pub max_violation: f64,
    /// Sample index attaining it.
    pub worst_index: Option<usize>,
    pub samples: usize,
}

impl ViolationReport {
    /// No violation beyond `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// A sample for the midpoint checks: `(x, y, α)` with `α ∈ [0, 1]`.
pub type MidpointSample<P> = (P, P, f64);

fn midpoint_report<P: InnerSpace>(
    samples: &[MidpointSample<P>],
    violation: impl Fn(&MidpointSample<P>) -> f64 + Sync,
) -> ViolationReport {
    let (max_violation, worst_index) = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let v = violation(s);
            // NaN counts as the worst possible outcome.
            (if v.is_nan() { f64::INFINITY } else { v }, Some(i))
        })
        .reduce(
            || (f64::NEG_INFINITY, None),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    ViolationReport {
        max_violation: if samples.is_empty() { 0.0 } else { max_violation },
        worst_index,
        samples: samples.len(),
    }
}

/// Checks `f((1-α)x + αy) ≤ (1-α)f(x) + αf(y) - (c/2)α(1-α)‖x-y‖²`.
pub fn check_strong_convexity<P: InnerSpace>(
    f: &ScalarFn<P>,
    c: f64,
    samples: &[MidpointSample<P>],
) -> ViolationReport {
    midpoint_report(samples, |(x, y, a)| {
        let lhs = f.value(&x.lerp(y, *a));
        let rhs = (1.0 - a) * f.value(x) + a * f.value(y)
            - 0.5 * c * a * (1.0 - a) * x.sub(y).norm_sq();
        lhs - rhs
    })
}

/// Checks `f((1-α)x + αy) ≥ (1-α)f(x) + αf(y) - (K/2)α(1-α)‖x-y‖²`.
pub fn check_semiconcavity<P: InnerSpace>(
    f: &ScalarFn<P>,
    k: f64,
    samples: &[MidpointSample<P>],
) -> ViolationReport {
    midpoint_report(samples, |(x, y, a)| {
        let lhs = f.value(&x.lerp(y, *a));
        let rhs = (1.0 - a) * f.value(x) + a * f.value(y)
            - 0.5 * k * a * (1.0 - a) * x.sub(y).norm_sq();
        rhs - lhs
    })
}

/// Largest gap between central differences and `⟨∇f(x), v⟩` over the sample
/// `(x, v)`, relative to `1 + |⟨∇f(x), v⟩|`. `None` without a gradient.
pub fn check_gradient<P: InnerSpace>(f: &ScalarFn<P>, samples: &[(P, P)], h: f64) -> Option<f64> {
    if !f.has_gradient() {
        return None;
    }
    let worst = samples
        .par_iter()
        .map(|(x, v)| {
            let g = f.gradient(x).expect("gradient present").inner(v);
            let mut xp = x.clone();
            xp.axpy(h, v);
            let mut xm = x.clone();
            xm.axpy(-h, v);
            let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
            (fd - g).abs() / (1.0 + g.abs())
        })
        .reduce(|| 0.0, f64::max);
    Some(worst)
}

/// `φ(x) + ψ(y) - ⟨x, y⟩`.
pub fn duality_gap<P: InnerSpace>(phi: &ScalarFn<P>, psi: &ScalarFn<P>, x: &P, y: &P) -> f64 {
    phi.value(x) + psi.value(y) - x.inner(y)
}

/// `count` midpoint samples in `R^dim` with coordinates uniform in
/// `[-radius, radius]` and `α` uniform in `[0, 1]`.
pub fn random_real_samples(
    dim: usize,
    count: usize,
    radius: f64,
    seed: Seed,
) -> Vec<MidpointSample<RealVector>> {
    let mut rng = seed.rng();
    let point = |rng: &mut rand_chacha::ChaCha8Rng| {
        RealVector((0..dim).map(|_| rng.random_range(-radius..=radius)).collect())
    };
    (0..count)
        .map(|_| {
            let x = point(&mut rng);
            let y = point(&mut rng);
            (x, y, rng.random_range(0.0..=1.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<MidpointSample<RealVector>> {
        random_real_samples(1, 200, 3.0, Seed::new(5, 0))
    }

    #[test]
    fn quadratic_is_tight() {
        let q = ScalarFn::<RealVector>::quadratic();
        assert!(check_strong_convexity(&q, 1.0, &samples()).holds(1e-10));
        assert!(check_semiconcavity(&q, 1.0, &samples()).holds(1e-10));
    }

    #[test]
    fn overclaimed_convexity_is_caught() {
        let f = ScalarFn::new(|x: &RealVector| x.norm_sq());
        let s = vec![(RealVector::scalar(0.0), RealVector::scalar(1.0), 0.5)];
        let r = check_strong_convexity(&f, 3.0, &s);
        assert!((r.max_violation - 0.125).abs() < 1e-15);
        assert_eq!(r.worst_index, Some(0));
        // Mirror: x² is 2-semiconcave but not 1-semiconcave.
        let r = check_semiconcavity(&f, 1.0, &s);
        assert!((r.max_violation - 0.125).abs() < 1e-15);
    }

    #[test]
    fn exp_is_convex_not_semiconcave() {
        let f = ScalarFn::new(|x: &RealVector| x.0[0].exp());
        assert!(check_strong_convexity(&f, 0.0, &samples()).holds(0.0));
        assert!(!check_semiconcavity(&f, 1.0, &samples()).holds(0.0));
    }

    #[test]
    fn empty_sample_reports_nothing() {
        let q = ScalarFn::<RealVector>::quadratic();
        let r = check_strong_convexity(&q, 1.0, &[]);
        assert_eq!(r.max_violation, 0.0);
        assert_eq!(r.worst_index, None);
    }

    #[test]
    fn quadratic_gap() {
        let q = ScalarFn::<RealVector>::quadratic();
        let x = RealVector(vec![1.0, -2.0]);
        let h = RealVector(vec![0.5, 0.25]);
        assert!(duality_gap(&q, &q, &x, &x).abs() < 1e-15);
        let gap = duality_gap(&q, &q, &x, &x.add(&h));
        assert!((gap - 0.5 * h.norm_sq()).abs() < 1e-14);
    }

    #[test]
    fn gradient_check_detects_wrong_gradient() {
        let good = ScalarFn::scaled_quadratic(2.0);
        let bad = ScalarFn::new(|x: &RealVector| x.norm_sq()).with_gradient(|x| x.clone());
        let s = vec![(RealVector::scalar(1.0), RealVector::scalar(1.0))];
        assert!(check_gradient(&good, &s, 1e-5).unwrap() < 1e-8);
        assert!(check_gradient(&bad, &s, 1e-5).unwrap() > 0.1);
    }
}
