//! Entropy along classical displacement interpolation between Gaussians.
//!
//! For `X ~ N(0, Σ₀)` and the optimal linear map `A` onto `N(0, Σ₁)`, the
//! interpolant is `X_t = ((1-t) I + t A) X`. Its entropy obeys the sandwich
//! `d log((1-t)/(1-s)) ≤ h(X_t) - h(X_s) ≤ d log(t/s)` for `s ≤ t`, where
//! `d` is the real dimension.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::config::RunConfig;
use super::report::{Comparison, Metric, Report, Series};
use crate::entropy::{gaussian_entropy, knn_entropy, MAX_KNN_DIMENSION};
use crate::error::{Error, Result};

pub const MAX_GEODESIC_DIMENSION: usize = 4;

fn covariance(values: &[f64], d: usize, default_scale: f64, key: &str) -> Result<DMatrix<f64>> {
    let m = match values.len() {
        0 => DMatrix::identity(d, d) * default_scale,
        l if l == d => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)),
        l if l == d * d => DMatrix::from_row_slice(d, d, values),
        l => return Err(Error::Config(format!("`{key}` has {l} entries; expected {d} or {}", d * d))),
    };
    if (&m - m.transpose()).abs().max() > 1e-12 * (1.0 + m.abs().max()) {
        return Err(Error::Config(format!("`{key}` is not symmetric")));
    }
    if m.clone().cholesky().is_none() {
        return Err(Error::Config(format!("`{key}` is not positive definite")));
    }
    Ok(m)
}

fn sym_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let d = eig.eigenvalues.map(f);
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// The symmetric positive map `A` with `A Σ₀ A = Σ₁`.
pub fn gaussian_optimal_map(cov0: &DMatrix<f64>, cov1: &DMatrix<f64>) -> DMatrix<f64> {
    let r = sym_apply(cov0, f64::sqrt);
    let r_inv = sym_apply(cov0, |v| 1.0 / v.sqrt());
    let mid = sym_apply(&(&r * cov1 * &r), f64::sqrt);
    &r_inv * mid * &r_inv
}

/// `(1-t) I + t A`.
pub fn interpolation_map(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    DMatrix::identity(a.nrows(), a.ncols()) * (1.0 - t) + a * t
}

/// Amount by which `dh` leaves `[d log((1-t)/(1-s)), d log(t/s)]`; zero inside.
pub fn sandwich_violation(dh: f64, s: f64, t: f64, d: usize) -> f64 {
    if s == t {
        return dh.abs();
    }
    let df = d as f64;
    let lower = df * ((1.0 - t) / (1.0 - s)).ln();
    let upper = df * (t / s).ln();
    (lower - dh).max(dh - upper).max(0.0)
}

pub fn run_geodesic(cfg: &RunConfig) -> Result<Report> {
    let d = cfg.int("dim")?;
    if d == 0 || d > MAX_GEODESIC_DIMENSION.min(MAX_KNN_DIMENSION) {
        return Err(Error::Config(format!("dim = {d} outside 1..={MAX_GEODESIC_DIMENSION}")));
    }
    let cov0 = covariance(&cfg.floats("cov0")?, d, 1.0, "cov0")?;
    let cov1 = covariance(&cfg.floats("cov1")?, d, 4.0, "cov1")?;
    let mut times = vec![0.0];
    let mut grid = cfg.floats("grid")?;
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    times.extend(grid);
    times.push(1.0);
    let samples = cfg.int("samples")?;
    let k = cfg.int("neighbours")?;
    let slack = cfg.float("slack")?;

    let a = gaussian_optimal_map(&cov0, &cov1);
    let chol = cov0.clone().cholesky().expect("validated").l();
    let mut rng = cfg.seed()?.rng();
    let base: Vec<nalgebra::DVector<f64>> = (0..samples)
        .map(|_| &chol * nalgebra::DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng)))
        .collect();

    let mut h_exact = Vec::with_capacity(times.len());
    let mut h_knn = Vec::with_capacity(times.len());
    let mut path = Series::new("path", &["t", "h_analytic", "h_knn"]);
    for &t in &times {
        let mt = interpolation_map(&a, t);
        let cov_t = &mt * &cov0 * mt.transpose();
        let exact = gaussian_entropy(&cov_t)?;
        let cloud: Vec<Vec<f64>> = base.iter().map(|x| (&mt * x).iter().copied().collect()).collect();
        let est = knn_entropy(&cloud, k)?;
        path.push(vec![t, exact, est]);
        h_exact.push(exact);
        h_knn.push(est);
    }

    let mut pairs = Series::new("pairs", &["s", "t", "lower", "upper", "dh_analytic", "dh_knn"]);
    let (mut worst_exact, mut worst_knn) = (0.0f64, 0.0f64);
    let mut checked = 0usize;
    for i in 0..times.len() {
        for j in i..times.len() {
            let (s, t) = (times[i], times[j]);
            let df = d as f64;
            let (lower, upper) = if i == j {
                (0.0, 0.0)
            } else {
                (df * ((1.0 - t) / (1.0 - s)).ln(), df * (t / s).ln())
            };
            let (dx, dk) = (h_exact[j] - h_exact[i], h_knn[j] - h_knn[i]);
            worst_exact = worst_exact.max(sandwich_violation(dx, s, t, d));
            worst_knn = worst_knn.max(sandwich_violation(dk, s, t, d));
            pairs.push(vec![s, t, lower, upper, dx, dk]);
            checked += 1;
        }
    }

    let mut report = Report::new(cfg);
    report.push(Metric::new(
        "sandwich_violation_analytic",
        worst_exact,
        Comparison::AtMost,
        0.0,
        "theorem sandwich, analytic Gaussian entropies",
    ).tolerance(1e-10))?;
    report.push(
        Metric::new("sandwich_violation_knn", worst_knn, Comparison::AtMost, 0.0, "theorem sandwich, nearest-neighbour estimates")
            .slack(slack),
    )?;
    let max_est_err = h_exact.iter().zip(&h_knn).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    report.push(Metric::info("knn_max_abs_error", max_est_err, "nearest-neighbour vs analytic entropy"))?;
    report.push(Metric::info("pairs_checked", checked as f64, "s ≤ t over the grid with endpoints 0 and 1"))?;
    report.add_series(path);
    report.add_series(pairs);
    Ok(report)
}
