//! Helpers shared by the integration tests.

#![allow(dead_code)]

use freegeo::convex::{RealVector, ScalarFn};
use rand::Rng;

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `f(x) = (α/2)‖x‖² + β softplus(γ⟨w, x⟩) + ⟨ℓ, x⟩` with unit `w`.
///
/// Its Hessian lies between `α` and `α + βγ²/4`, so these are exact
/// convexity and semiconcavity constants.
#[derive(Clone, Debug)]
pub struct SoftplusFn {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub w: Vec<f64>,
    pub lin: Vec<f64>,
}

impl SoftplusFn {
    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let mut w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
        w.iter_mut().for_each(|v| *v /= norm);
        Self {
            alpha: rng.random_range(0.0..2.0),
            beta: rng.random_range(0.0..3.0),
            gamma: rng.random_range(0.2..3.0),
            w,
            lin: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        0.5 * self.alpha * dot(x, x) + self.beta * softplus(self.gamma * dot(&self.w, x)) + dot(&self.lin, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let wx: f64 = self.w.iter().zip(x).map(|(p, q)| p * q).sum();
        let s = self.beta * self.gamma * sigmoid(self.gamma * wx);
        x.iter()
            .zip(&self.w)
            .zip(&self.lin)
            .map(|((xi, wi), li)| self.alpha * xi + s * wi + li)
            .collect()
    }

    pub fn convexity(&self) -> f64 {
        self.alpha
    }

    pub fn semiconcavity(&self) -> f64 {
        self.alpha + 0.25 * self.beta * self.gamma * self.gamma
    }

    pub fn scalar_fn(&self) -> ScalarFn<RealVector> {
        let (a, b) = (self.clone(), self.clone());
        ScalarFn::new(move |x: &RealVector| a.value(&x.0))
            .with_gradient(move |x: &RealVector| RealVector(b.gradient(&x.0)))
            .with_bounds(self.convexity(), self.semiconcavity())
    }
}

/// Minimum of a 1-D function on a uniform grid, polished by golden section
/// on the best cell.
pub fn grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> f64 {
    let h = (hi - lo) / cells as f64;
    let best = (0..=cells)
        .map(|i| lo + h * i as f64)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let (mut a, mut b) = (best - h, best + h);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b)).min(f(best))
}
