//! One-dimensional transport: empirical quantile functions, the monotone
//! coupling and its Kantorovich potentials.

use serde::{Deserialize, Serialize};

use crate::convex::{RealVector, ScalarFn};
use crate::error::{Error, Result};
use crate::matcore::CMatrix;

/// Uniform empirical measure on sorted support points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantile1D {
    support: Vec<f64>,
}

impl Quantile1D {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty support".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("support point".into()));
        }
        points.sort_by(f64::total_cmp);
        Ok(Self { support: points })
    }

    /// Empirical spectral distribution of a Hermitian matrix.
    pub fn spectral(x: &CMatrix) -> Result<Self> {
        let scale = 1.0 + x.max_abs_entry();
        if !x.is_hermitian(1e-10 * scale) {
            return Err(Error::Domain("matrix is not Hermitian".into()));
        }
        Self::new(x.hermitian_eigenvalues())
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `∫ x² dμ`.
    pub fn second_moment(&self) -> f64 {
        self.support.iter().map(|x| x * x).sum::<f64>() / self.len() as f64
    }

    /// The monotone coupling as cells `(x, y, mass)`.
    pub fn monotone_coupling(&self, other: &Self) -> Vec<(f64, f64, f64)> {
        let (p, q) = (self.len(), other.len());
        let (mut i, mut j) = (0, 0);
        let mut u = 0.0;
        let mut cells = Vec::with_capacity(p + q);
        // Breakpoints i/p and j/q compared exactly via i q vs j p.
        while i < p && j < q {
            let (next_i, next_j) = ((i + 1) * q, (j + 1) * p);
            let end = next_i.min(next_j) as f64 / (p * q) as f64;
            cells.push((self.support[i], other.support[j], end - u));
            u = end;
            if next_i <= next_j {
                i += 1;
            }
            if next_j <= next_i {
                j += 1;
            }
        }
        cells
    }

    /// Exact W2 between the two measures through the quantile coupling.
    pub fn w2(&self, other: &Self) -> f64 {
        self.monotone_coupling(other)
            .iter()
            .map(|(x, y, w)| w * (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// W2 between the empirical spectral distributions of two Hermitian matrices.
pub fn spectral_w2_1d(x: &CMatrix, y: &CMatrix) -> Result<f64> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch(format!("sizes {} and {}", x.n(), y.n())));
    }
    Ok(Quantile1D::spectral(x)?.w2(&Quantile1D::spectral(y)?))
}

/// Convex potentials `(φ, ψ)` for the monotone coupling of `mu` and `nu`.
///
/// `φ` is the piecewise-linear convex function through the nodes
/// `(x_k, φ_k)`, with chord slopes between the images of neighbouring nodes
/// and the extreme images as slopes at infinity; its subgradient at a support
/// point contains the point's image. `ψ = φ*` exactly: it is finite on
/// `[min ν, max ν]` and `+∞` outside. Hence `φ(x) + ψ(y) ≥ xy` everywhere, with
/// equality along the coupling.
pub fn kantorovich_potentials_1d(
    mu: &Quantile1D,
    nu: &Quantile1D,
) -> (ScalarFn<RealVector>, ScalarFn<RealVector>) {
    // Unique source nodes with the range of their images.
    let mut xs: Vec<f64> = Vec::new();
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    for (x, y, _) in mu.monotone_coupling(nu) {
        if xs.last() == Some(&x) {
            let k = xs.len() - 1;
            lo[k] = lo[k].min(y);
            hi[k] = hi[k].max(y);
        } else {
            xs.push(x);
            lo.push(y);
            hi.push(y);
        }
    }
    let k = xs.len();
    // slopes[i] is the slope on (xs[i-1], xs[i]); slopes[0] and slopes[k]
    // are the slopes at -∞ and +∞.
    let mut slopes = Vec::with_capacity(k + 1);
    slopes.push(lo[0]);
    for i in 1..k {
        slopes.push(0.5 * (hi[i - 1] + lo[i]));
    }
    slopes.push(hi[k - 1]);
    let mut vals = vec![0.0; k];
    for i in 1..k {
        vals[i] = vals[i - 1] + slopes[i] * (xs[i] - xs[i - 1]);
    }
    let (y_min, y_max) = (lo[0], hi[k - 1]);

    let (px, pv, ps) = (xs.clone(), vals.clone(), slopes.clone());
    let phi_value = move |x: f64| {
        let i = px.partition_point(|&p| p <= x);
        if i == 0 {
            pv[0] + ps[0] * (x - px[0])
        } else {
            pv[i - 1] + ps[i] * (x - px[i - 1])
        }
    };
    let (gx, glo, ghi, gs) = (xs.clone(), lo.clone(), hi, slopes);
    let phi_grad = move |x: f64| match gx.binary_search_by(|p| p.total_cmp(&x)) {
        // At a node, return the midpoint of the images it is coupled to.
        Ok(i) => 0.5 * (glo[i] + ghi[i]),
        Err(i) => gs[i],
    };
    let (qx, qv) = (xs.clone(), vals.clone());
    let psi_argmax = move |y: f64| -> Option<usize> {
        if !(y_min..=y_max).contains(&y) {
            return None;
        }
        (0..qx.len()).max_by(|&a, &b| (qx[a] * y - qv[a]).total_cmp(&(qx[b] * y - qv[b])))
    };
    let arg = psi_argmax.clone();
    let (vx, vv) = (xs.clone(), vals);
    let phi = ScalarFn::new(move |x: &RealVector| phi_value(x.0[0]))
        .with_gradient(move |x: &RealVector| RealVector::scalar(phi_grad(x.0[0])));
    let psi = ScalarFn::new(move |y: &RealVector| match psi_argmax(y.0[0]) {
        Some(a) => vx[a] * y.0[0] - vv[a],
        None => f64::INFINITY,
    })
    .with_gradient(move |y: &RealVector| {
        RealVector::scalar(arg(y.0[0]).map_or(f64::NAN, |a| xs[a]))
    });
    (phi, psi)
}
