use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::matrix::{CMatrix, C64};

/// A point of `M_n^m` with the inner product `⟨X,Y⟩ = Σ_j tr_n(X_j^* Y_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTuple {
    n: usize,
    mats: Vec<CMatrix>,
}

impl MatrixTuple {
    pub fn new(mats: Vec<CMatrix>) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| Error::InvalidArgument("tuple needs at least one matrix".into()))?;
        let n = first.n();
        if n == 0 {
            return Err(Error::InvalidArgument("matrix size must be positive".into()));
        }
        if let Some(bad) = mats.iter().find(|a| a.n() != n) {
            return Err(Error::DimensionMismatch(format!(
                "tuple mixes sizes {n} and {}",
                bad.n()
            )));
        }
        Ok(Self { n, mats })
    }

    pub fn single(a: CMatrix) -> Self {
        Self::new(vec![a]).expect("single positive-size matrix")
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            mats: vec![CMatrix::zeros(n); m],
        }
    }

    /// The tuple `(z_1 I, ..., z_m I)`.
    pub fn scalars(n: usize, z: &[C64]) -> Self {
        Self {
            n,
            mats: z.iter().map(|&v| CMatrix::scalar(n, v)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.mats.len()
    }

    pub fn get(&self, j: usize) -> &CMatrix {
        &self.mats[j]
    }

    pub fn get_mut(&mut self, j: usize) -> &mut CMatrix {
        &mut self.mats[j]
    }

    pub fn mats(&self) -> &[CMatrix] {
        &self.mats
    }

    pub fn into_mats(self) -> Vec<CMatrix> {
        self.mats
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.m() != other.m() {
            return Err(Error::DimensionMismatch(format!(
                "(n={}, m={}) vs (n={}, m={})",
                self.n,
                self.m(),
                other.n,
                other.m()
            )));
        }
        Ok(())
    }

    pub fn trace_inner_product(&self, other: &Self) -> Result<C64> {
        self.check_same_shape(other)?;
        Ok(self.mats.iter().zip(&other.mats).map(|(a, b)| a.inner(b)).sum())
    }

    /// Real part of the inner product; panics on shape mismatch.
    pub fn re_inner(&self, other: &Self) -> f64 {
        self.trace_inner_product(other)
            .expect("re_inner on mismatched tuples")
            .re
    }

    pub fn norm_sq(&self) -> f64 {
        self.mats.iter().map(CMatrix::norm_sq).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn operator_norm(&self) -> f64 {
        self.mats
            .iter()
            .map(CMatrix::operator_norm)
            .fold(0.0, f64::max)
    }

    /// `((X_j + X_j^*)/2, (X_j - X_j^*)/2i)_j`, interleaved per coordinate.
    pub fn sa_embedding(&self) -> Self {
        let half = C64::new(0.5, 0.0);
        let minus_half_i = C64::new(0.0, -0.5);
        let mut out = Vec::with_capacity(2 * self.m());
        for a in &self.mats {
            let adj = a.adjoint();
            out.push((a + &adj).scale(half));
            out.push((a - &adj).scale(minus_half_i));
        }
        Self { n: self.n, mats: out }
    }

    /// Inverse of [`sa_embedding`](Self::sa_embedding): `X_j = A_j + i B_j`.
    pub fn from_sa_embedding(parts: &Self) -> Result<Self> {
        if !parts.m().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(
                "self-adjoint embedding must have an even number of entries".into(),
            ));
        }
        let i = C64::new(0.0, 1.0);
        let mats = parts
            .mats
            .chunks(2)
            .map(|p| {
                let mut a = p[0].clone();
                a.axpy(i, &p[1]);
                a
            })
            .collect();
        Ok(Self { n: parts.n, mats })
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_same_shape(other).expect("add on mismatched tuples");
        Self {
            n: self.n,
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_same_shape(other).expect("sub on mismatched tuples");
        Self {
            n: self.n,
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            mats: self.mats.iter().map(|a| a.scale_re(s)).collect(),
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.check_same_shape(x).expect("axpy on mismatched tuples");
        let a = C64::new(a, 0.0);
        for (s, v) in self.mats.iter_mut().zip(&x.mats) {
            s.axpy(a, v);
        }
    }

    /// `(1-t) self + t other`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        let mut out = self.scale(1.0 - t);
        out.axpy(t, other);
        out
    }

    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self {
            n: self.n,
            mats: self.mats.iter().map(|a| a.conjugate_by(u)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mats.iter().all(CMatrix::is_finite)
    }

    /// Little-endian complex128, row-major, tuple entries consecutive.
    pub fn write_le<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut buf = Vec::with_capacity(16 * self.n * self.n * self.m());
        for a in &self.mats {
            for z in a.data() {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_le<R: Read>(r: &mut R, n: usize, m: usize) -> Result<Self> {
        let mut buf = vec![0u8; 16 * n * n * m];
        r.read_exact(&mut buf)?;
        let mut mats = Vec::with_capacity(m);
        for chunk in buf.chunks(16 * n * n) {
            let data = chunk
                .chunks(16)
                .map(|b| {
                    let re = f64::from_le_bytes(b[0..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(b[8..16].try_into().expect("8 bytes"));
                    C64::new(re, im)
                })
                .collect();
            mats.push(CMatrix::from_row_major(n, data)?);
        }
        Self::new(mats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pair_inner_product_is_one() {
        let x = MatrixTuple::single(CMatrix::identity(5));
        let v = x.trace_inner_product(&x).unwrap();
        assert!((v - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_tuple_inner_product_is_zero() {
        let x = MatrixTuple::zeros(3, 2);
        let y = MatrixTuple::scalars(3, &[C64::new(1.0, 2.0), C64::new(-1.0, 0.5)]);
        assert_eq!(x.trace_inner_product(&y).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let x = MatrixTuple::zeros(3, 2);
        let y = MatrixTuple::zeros(3, 1);
        assert!(x.trace_inner_product(&y).is_err());
        assert!(MatrixTuple::new(vec![CMatrix::zeros(2), CMatrix::zeros(3)]).is_err());
    }

    #[test]
    fn hermitian_embeds_as_itself_and_zero() {
        let h = CMatrix::diag_real(&[1.0, -2.0]);
        let e = MatrixTuple::single(h.clone()).sa_embedding();
        assert_eq!(e.get(0), &h);
        assert!(e.get(1).max_abs_entry() < 1e-15);
    }

    #[test]
    fn i_identity_embeds_as_zero_and_identity() {
        let e = MatrixTuple::single(CMatrix::scalar(3, C64::new(0.0, 1.0))).sa_embedding();
        assert!(e.get(0).max_abs_entry() < 1e-15);
        assert!((e.get(1) - &CMatrix::identity(3)).max_abs_entry() < 1e-15);
    }

    #[test]
    fn binary_round_trip() {
        let x = MatrixTuple::new(vec![
            CMatrix::from_fn(2, |i, j| C64::new(i as f64, -(j as f64) * 0.25)),
            CMatrix::identity(2),
        ])
        .unwrap();
        let mut buf = Vec::new();
        x.write_le(&mut buf).unwrap();
        assert_eq!(buf.len(), 2 * 4 * 16);
        // first entry of the second matrix sits after the four entries of the first
        assert_eq!(&buf[64..72], &1.0f64.to_le_bytes());
        let back = MatrixTuple::read_le(&mut buf.as_slice(), 2, 2).unwrap();
        assert_eq!(back, x);
    }
}
