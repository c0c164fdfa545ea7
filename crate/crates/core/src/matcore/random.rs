//! Seeded streams and the reference random-matrix samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::matrix::{CMatrix, C64};
use super::tuple::MatrixTuple;

/// Largest matrix size produced by [`tensor_embed`].
pub const MAX_TENSOR_SIZE: usize = 4096;

/// A reproducible random stream: the master seed picks the key and the stream
/// id picks an independent ChaCha stream under that key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A child stream under the same master seed, keyed by `tag`.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(1))),
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian matrix with `E|a_ij|^2 = var`.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(n: usize, var: f64, rng: &mut R) -> CMatrix {
    let s = (var / 2.0).sqrt();
    CMatrix::from_fn(n, |_, _| C64::new(s * normal(rng), s * normal(rng)))
}

/// Standard Gaussian vector of `M_n^m` in tr_n-orthonormal coordinates
/// (`√n E_ij`, `√n i E_ij`): entries are `√n (g + i g')`.
pub fn standard_gaussian_tuple<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> MatrixTuple {
    let mats = (0..m).map(|_| complex_gaussian_matrix(n, 2.0 * n as f64, rng)).collect();
    MatrixTuple::new(mats).expect("n, m positive")
}

/// i.i.d. complex Gaussian entries of variance `1/n`, so `E tr_n(X^*X) = 1`.
pub fn sample_ginibre(n: usize, m: usize, seed: Seed) -> Result<MatrixTuple> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be positive".into()));
    }
    let mut rng = seed.rng();
    let mats = (0..m)
        .map(|_| complex_gaussian_matrix(n, 1.0 / n as f64, &mut rng))
        .collect();
    MatrixTuple::new(mats)
}

pub fn gue_from_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = complex_gaussian_matrix(n, 1.0 / n as f64, rng);
    (&g + &g.adjoint()).scale_re(std::f64::consts::FRAC_1_SQRT_2)
}

/// Hermitian Gaussian matrix normalized so `E tr_n(X^2) = 1`.
pub fn sample_gue(n: usize, seed: Seed) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    Ok(gue_from_rng(n, &mut seed.rng()))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn sample_unitary(n: usize, seed: Seed) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let g = complex_gaussian_matrix(n, 1.0, &mut seed.rng()).to_nalgebra();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..n {
            q[(row, c)] *= phase;
        }
    }
    Ok(CMatrix::from_nalgebra(&q))
}

/// `(A ⊗ I_l, I_k ⊗ B)` as matrices of size `k l`.
pub fn tensor_embed(a: &CMatrix, b: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let (k, l) = (a.n(), b.n());
    let n = k
        .checked_mul(l)
        .filter(|&n| n <= MAX_TENSOR_SIZE && n > 0)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("tensor size {k}x{l} outside 1..={MAX_TENSOR_SIZE}"))
        })?;
    let left = CMatrix::from_fn(n, |r, c| {
        let (i, p) = (r / l, r % l);
        let (j, q) = (c / l, c % l);
        if p == q {
            a.get(i, j)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let right = CMatrix::from_fn(n, |r, c| {
        let (i, p) = (r / l, r % l);
        let (j, q) = (c / l, c % l);
        if i == j {
            b.get(p, q)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draw() {
        let s = Seed::new(42, 3);
        assert_eq!(sample_ginibre(4, 2, s).unwrap(), sample_ginibre(4, 2, s).unwrap());
        assert_ne!(
            sample_ginibre(4, 2, s).unwrap(),
            sample_ginibre(4, 2, Seed::new(42, 4)).unwrap()
        );
    }

    #[test]
    fn derived_streams_differ() {
        let s = Seed::new(1, 0);
        assert_ne!(s.derive(0), s.derive(1));
        assert_eq!(s.derive(5), s.derive(5));
    }

    #[test]
    fn gue_is_hermitian() {
        let g = sample_gue(9, Seed::new(7, 0)).unwrap();
        assert_eq!(g, g.adjoint());
    }

    #[test]
    fn unitary_is_unitary() {
        let u = sample_unitary(5, Seed::new(3, 0)).unwrap();
        let e = &u.adjoint().matmul(&u) - &CMatrix::identity(5);
        assert!(e.max_abs_entry() < 1e-12);
    }

    #[test]
    fn tensor_factors_commute_exactly() {
        let a = sample_gue(3, Seed::new(1, 0)).unwrap();
        let b = sample_ginibre(4, 1, Seed::new(1, 1)).unwrap().get(0).clone();
        let (x, y) = tensor_embed(&a, &b).unwrap();
        assert_eq!(x.commutator(&y).max_abs_entry(), 0.0);
    }

    #[test]
    fn tensor_trace_is_factor_trace() {
        let a = CMatrix::diag_real(&[1.0, 2.0]);
        let (x, _) = tensor_embed(&a, &CMatrix::identity(3)).unwrap();
        assert!((x.tr_n() - C64::new(1.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn oversized_tensor_rejected() {
        let a = CMatrix::zeros(100);
        assert!(tensor_embed(&a, &a).is_err());
    }
}
