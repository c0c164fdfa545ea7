//! Wasserstein-2 distance between empirical ensembles of matrix tuples under
//! the squared `tr_n` cost `‖x - y‖²`.
//!
//! The value is an upper bound for the distance between the underlying laws
//! only in the sense of the empirical measures; nothing here claims
//! convergence in `n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{fingerprint, MatrixTuple};

use super::assignment::solve_assignment;
use super::sinkhorn::{sinkhorn, SinkhornOptions};

/// Largest sample count accepted by the exact solver.
pub const MAX_ASSIGNMENT_SIZE: usize = 4096;

/// An optimal pairing `x_i ↔ y_{pairing[i]}` between equal-size ensembles.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub source: Vec<MatrixTuple>,
    pub target: Vec<MatrixTuple>,
    pub pairing: Vec<usize>,
    /// Mean of `‖x_i - y_{pairing[i]}‖²`.
    pub cost: f64,
}

/// Serializable digest of a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub source_hash: String,
    pub target_hash: String,
    pub pairing: Vec<usize>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn w2(&self) -> f64 {
        self.cost.sqrt()
    }

    /// Mean of `re ⟨x_i, y_{pairing[i]}⟩`.
    pub fn inner_product(&self) -> f64 {
        self.source
            .iter()
            .zip(&self.pairing)
            .map(|(x, &j)| x.re_inner(&self.target[j]))
            .sum::<f64>()
            / self.source.len() as f64
    }

    pub fn summary(&self) -> PlanSummary {
        PlanSummary {
            source_hash: fingerprint(&self.source),
            target_hash: fingerprint(&self.target),
            pairing: self.pairing.clone(),
            cost: self.cost,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum W2Method {
    Exact,
    Sinkhorn(SinkhornOptions),
}

/// Result of [`empirical_w2`]. `plan` is present for the exact method and
/// `epsilon` for the regularized one.
#[derive(Clone, Debug)]
pub struct W2Estimate {
    pub w2: f64,
    pub cost: f64,
    pub epsilon: Option<f64>,
    pub plan: Option<TransportPlan>,
}

fn check_shapes(a: &[MatrixTuple], b: &[MatrixTuple]) -> Result<()> {
    let (Some(x), Some(y)) = (a.first(), b.first()) else {
        return Err(Error::InvalidArgument("ensembles must be nonempty".into()));
    };
    let (n, m) = (x.n(), x.m());
    if a.iter().chain(b).any(|s| s.n() != n || s.m() != m) || y.n() != n || y.m() != m {
        return Err(Error::DimensionMismatch("ensembles must share (n, m)".into()));
    }
    Ok(())
}

/// Row-major matrix of `‖a_i - b_j‖²`, assembled in parallel.
pub fn cost_matrix(a: &[MatrixTuple], b: &[MatrixTuple]) -> Vec<f64> {
    let cols = b.len();
    let mut out = vec![0.0; a.len() * cols];
    out.par_chunks_mut(cols.max(1)).zip(a.par_iter()).for_each(|(row, x)| {
        for (c, y) in row.iter_mut().zip(b) {
            *c = x.sub(y).norm_sq();
        }
    });
    out
}

/// Exact empirical W2 with its optimal pairing.
pub fn exact_w2(a: &[MatrixTuple], b: &[MatrixTuple]) -> Result<(f64, TransportPlan)> {
    check_shapes(a, b)?;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "exact transport needs equal counts, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let k = a.len();
    if k > MAX_ASSIGNMENT_SIZE {
        return Err(Error::InvalidArgument(format!(
            "{k} samples exceed the assignment cap {MAX_ASSIGNMENT_SIZE}"
        )));
    }
    let cost = cost_matrix(a, b);
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("transport cost".into()));
    }
    let pairing = solve_assignment(&cost, k);
    let total = (0..k).map(|i| cost[i * k + pairing[i]]).sum::<f64>() / k as f64;
    let plan = TransportPlan {
        source: a.to_vec(),
        target: b.to_vec(),
        pairing,
        cost: total,
    };
    Ok((total.sqrt(), plan))
}

pub fn empirical_w2(a: &[MatrixTuple], b: &[MatrixTuple], method: W2Method) -> Result<W2Estimate> {
    match method {
        W2Method::Exact => {
            let (w2, plan) = exact_w2(a, b)?;
            Ok(W2Estimate {
                w2,
                cost: plan.cost,
                epsilon: None,
                plan: Some(plan),
            })
        }
        W2Method::Sinkhorn(opts) => {
            check_shapes(a, b)?;
            let cost = cost_matrix(a, b);
            let r = sinkhorn(&cost, a.len(), b.len(), &opts)?;
            Ok(W2Estimate {
                w2: r.cost.sqrt(),
                cost: r.cost,
                epsilon: Some(r.epsilon),
                plan: None,
            })
        }
    }
}

/// Largest mean inner product over pairings:
/// `C = ½(E‖x‖² + E‖y‖² - W2²)`.
pub fn optimal_inner_product(a: &[MatrixTuple], b: &[MatrixTuple]) -> Result<f64> {
    let (_, plan) = exact_w2(a, b)?;
    let mean_sq = |s: &[MatrixTuple]| s.iter().map(MatrixTuple::norm_sq).sum::<f64>() / s.len() as f64;
    Ok(0.5 * (mean_sq(a) + mean_sq(b) - plan.cost))
}

/// `x_i(t) = (1-t) x_i + t y_{pairing[i]}`; the endpoints are returned exactly.
pub fn displacement(plan: &TransportPlan, t: f64) -> Result<Vec<MatrixTuple>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [0, 1]")));
    }
    Ok(plan
        .source
        .iter()
        .zip(&plan.pairing)
        .map(|(x, &j)| {
            let y = &plan.target[j];
            if t == 0.0 {
                x.clone()
            } else if t == 1.0 {
                y.clone()
            } else {
                x.lerp(y, t)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{sample_ginibre, CMatrix, Seed, C64};

    fn ensemble(seed: u64, count: usize) -> Vec<MatrixTuple> {
        (0..count)
            .map(|k| sample_ginibre(3, 2, Seed::new(seed, k as u64)).unwrap())
            .collect()
    }

    #[test]
    fn self_distance_is_zero_with_identity() {
        let a = ensemble(1, 12);
        let (w, plan) = exact_w2(&a, &a).unwrap();
        assert_eq!(w, 0.0);
        assert_eq!(plan.pairing, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn translation_distance() {
        let a = ensemble(2, 10);
        let c = 0.7;
        let b: Vec<MatrixTuple> = a
            .iter()
            .map(|x| {
                let mut y = x.clone();
                *y.get_mut(0) = &y.get(0).clone() + &CMatrix::scalar(3, C64::new(c, 0.0));
                y
            })
            .collect();
        let (w, _) = exact_w2(&a, &b).unwrap();
        assert!((w - c).abs() < 1e-12);
    }

    #[test]
    fn count_mismatch_rejected() {
        assert!(exact_w2(&ensemble(3, 4), &ensemble(4, 5)).is_err());
    }

    #[test]
    fn displacement_endpoints_are_exact() {
        let a = ensemble(5, 6);
        let b = ensemble(6, 6);
        let (_, plan) = exact_w2(&a, &b).unwrap();
        assert_eq!(displacement(&plan, 0.0).unwrap(), a);
        let end = displacement(&plan, 1.0).unwrap();
        for (i, y) in end.iter().enumerate() {
            assert_eq!(y, &b[plan.pairing[i]]);
        }
        assert!(displacement(&plan, 1.5).is_err());
    }

    #[test]
    fn summary_hashes_are_stable() {
        let a = ensemble(7, 3);
        let (_, plan) = exact_w2(&a, &a).unwrap();
        let s = plan.summary();
        assert_eq!(s.source_hash, s.target_hash);
        assert_eq!(s.source_hash.len(), 64);
    }
}
