//! Real inner-product spaces the convex routines run on.

use serde::{Deserialize, Serialize};

use crate::matcore::MatrixTuple;

/// A point of a real inner-product space.
///
/// Implementations must keep `inner` symmetric, bilinear and positive
/// definite; mixing points of different shapes is a caller bug and may panic.
pub trait InnerSpace: Clone + Send + Sync + 'static {
    fn inner(&self, other: &Self) -> f64;
    fn scale(&self, s: f64) -> Self;
    /// `self += a x`.
    fn axpy(&mut self, a: f64, x: &Self);

    fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// `(1-t) self + t other`.
    fn lerp(&self, other: &Self, t: f64) -> Self {
        let mut out = self.scale(1.0 - t);
        out.axpy(t, other);
        out
    }

    fn zero_like(&self) -> Self {
        self.scale(0.0)
    }
}

/// Coordinates in `R^d` with the Euclidean inner product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealVector(pub Vec<f64>);

impl RealVector {
    pub fn scalar(x: f64) -> Self {
        Self(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for RealVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl InnerSpace for RealVector {
    fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.0.len(), other.0.len(), "vector lengths differ");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    fn scale(&self, s: f64) -> Self {
        Self(self.0.iter().map(|a| a * s).collect())
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        assert_eq!(self.0.len(), x.0.len(), "vector lengths differ");
        for (y, v) in self.0.iter_mut().zip(&x.0) {
            *y += a * v;
        }
    }
}

/// Matrix tuples with `re ⟨X, Y⟩ = Σ_j re tr_n(X_j^* Y_j)`.
impl InnerSpace for MatrixTuple {
    fn inner(&self, other: &Self) -> f64 {
        self.re_inner(other)
    }

    fn scale(&self, s: f64) -> Self {
        MatrixTuple::scale(self, s)
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        MatrixTuple::axpy(self, a, x)
    }

    fn norm_sq(&self) -> f64 {
        MatrixTuple::norm_sq(self)
    }
}
