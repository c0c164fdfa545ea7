//! Dense complex square matrices in row-major order.
//!
//! Traces come in two flavours: `trace` is the raw sum of the diagonal and
//! `tr_n` divides by `n`. Everything downstream uses `tr_n`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, C64::new(1.0, 0.0))
    }

    pub fn scalar(n: usize, z: C64) -> Self {
        let mut out = Self::zeros(n);
        for i in 0..n {
            out.data[i * n + i] = z;
        }
        out
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds from row-major data of length `n*n`.
    pub fn from_row_major(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut out = Self::zeros(n);
        for (i, v) in values.iter().enumerate() {
            out.data[i * n + i] = C64::new(*v, 0.0);
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.n + j] = z;
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "matmul size mismatch");
        let n = self.n;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.data[k * n..(k + 1) * n];
                for (r, b) in row.iter_mut().zip(orow) {
                    *r += a * b;
                }
            }
        }
        Self { n, data: out }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|a| a * z).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: C64, x: &Self) {
        assert_eq!(self.n, x.n, "axpy size mismatch");
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn tr_n(&self) -> C64 {
        self.trace() / self.n as f64
    }

    /// `tr_n(self * other)` without forming the product.
    pub fn tr_n_product(&self, other: &Self) -> C64 {
        assert_eq!(self.n, other.n, "trace product size mismatch");
        let n = self.n;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc / n as f64
    }

    /// `tr_n(self^* other)`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.n, other.n, "inner product size mismatch");
        let s: C64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s / self.n as f64
    }

    /// `tr_n(self^* self)`.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>() / self.n as f64
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.n;
        for i in 0..n {
            for j in i..n {
                if (self.data[i * n + j] - self.data[j * n + i].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| self.data[i * n + j])
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        let mut s: Vec<f64> = self.to_nalgebra().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn operator_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Eigenvalues of the Hermitian part, ascending. Callers check hermiticity.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        let h = self.to_nalgebra();
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Nearest point (in every unitarily invariant norm) of the operator-norm
    /// ball of radius `r`: singular values above `r` are clipped to `r`.
    pub fn clip_singular_values(&self, r: f64) -> Self {
        let a = self.to_nalgebra();
        let svd = a.svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        if smax <= r {
            return self.clone();
        }
        let u = svd.u.expect("left singular vectors requested");
        let vt = svd.v_t.expect("right singular vectors requested");
        let k = svd.singular_values.len();
        let mut us = u.clone();
        for c in 0..k {
            let s = svd.singular_values[c].min(r);
            for rr in 0..us.nrows() {
                us[(rr, c)] *= C64::new(s, 0.0);
            }
        }
        Self::from_nalgebra(&(us * vt))
    }

    /// `u * self * u^*`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "add size mismatch");
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "sub size mismatch");
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_re(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_has_unit_normalized_trace() {
        assert_eq!(CMatrix::identity(7).tr_n(), c(1.0, 0.0));
    }

    #[test]
    fn trace_product_matches_full_product() {
        let a = CMatrix::from_fn(3, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let b = CMatrix::from_fn(3, |i, j| c((i * j) as f64, 1.0 + i as f64));
        let direct = a.matmul(&b).tr_n();
        assert!((a.tr_n_product(&b) - direct).norm() < 1e-12);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        assert!((CMatrix::diag_real(&[1.0, -3.0]).operator_norm() - 3.0).abs() < 1e-12);
        assert!((CMatrix::scalar(4, c(0.0, 2.5)).operator_norm() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn clipping_keeps_small_matrices_and_caps_large_ones() {
        let d = CMatrix::diag_real(&[0.3, -2.0, 5.0]);
        assert_eq!(d.clip_singular_values(10.0), d);
        let clipped = d.clip_singular_values(1.0);
        let expect = CMatrix::diag_real(&[0.3, -1.0, 1.0]);
        assert!((&clipped - &expect).max_abs_entry() < 1e-12);
    }

    #[test]
    fn hermitian_eigenvalues_sorted() {
        let h = CMatrix::from_row_major(2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)])
            .unwrap();
        let ev = h.hermitian_eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn from_row_major_rejects_bad_length() {
        assert!(CMatrix::from_row_major(2, vec![c(0.0, 0.0); 3]).is_err());
    }
}
