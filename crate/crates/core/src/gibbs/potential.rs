//! Strongly convex potentials `φ` on `M_n^m` given by quantifier-free formulas.

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::convex::{check_strong_convexity, ScalarFn, ViolationReport};
use crate::error::{Error, Result};
use crate::logic::{evaluate, parse, value_and_gradient, BinaryOp, EvalOptions, Formula, Letter, NcPolynomial};
use crate::matcore::{standard_gaussian_tuple, MatrixTuple, Seed, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    formula: Formula,
    c: f64,
    m: usize,
}

impl Potential {
    /// `formula` must be quantifier-free in at most `m` free variables and
    /// `c > 0` its declared strong-convexity constant.
    pub fn new(formula: Formula, c: f64, m: usize) -> Result<Self> {
        if !formula.is_quantifier_free() {
            return Err(Error::Unsupported(
                "potentials must be quantifier-free (gradients of quantified formulas are not available)".into(),
            ));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("convexity constant c = {c} must be positive")));
        }
        if m == 0 || formula.free_arity() > m {
            return Err(Error::DimensionMismatch(format!(
                "formula uses {} free variables but m = {m}",
                formula.free_arity()
            )));
        }
        Ok(Self { formula, c, m })
    }

    pub fn parse(text: &str, c: f64, m: usize) -> Result<Self> {
        Self::new(parse(text)?, c, m)
    }

    /// `(c/2) ‖X‖² + re ⟨a, X⟩` with scalar `a_j`.
    pub fn quadratic_with_tilt(m: usize, c: f64, tilt: &[C64]) -> Result<Self> {
        if !tilt.is_empty() && tilt.len() != m {
            return Err(Error::DimensionMismatch(format!("tilt of length {} for m = {m}", tilt.len())));
        }
        let mut p = NcPolynomial::zero();
        for j in 0..m {
            let x = Letter::free(j);
            p = p.add(&NcPolynomial::monomial(C64::new(0.5 * c, 0.0), vec![x.star(), x]));
            if let Some(a) = tilt.get(j) {
                // re tr(a^* x) = re tr(conj(a) x) for scalar a.
                p = p.add(&NcPolynomial::monomial(a.conj(), vec![x]));
            }
        }
        Self::new(Formula::atom(p), c, m)
    }

    /// `φ + re ⟨a, X⟩` with scalar `a_j`; the convexity constant is unchanged.
    pub fn with_linear_tilt(&self, tilt: &[C64]) -> Result<Self> {
        if tilt.len() != self.m {
            return Err(Error::DimensionMismatch(format!("tilt of length {} for m = {}", tilt.len(), self.m)));
        }
        let mut p = NcPolynomial::zero();
        for (j, a) in tilt.iter().enumerate() {
            p = p.add(&NcPolynomial::monomial(a.conj(), vec![Letter::free(j)]));
        }
        let f = Formula::binary(BinaryOp::Add, self.formula.clone(), Formula::atom(p));
        Self::new(f, self.c, self.m)
    }

    /// `(c/2) ‖X‖²`.
    pub fn quadratic(m: usize, c: f64) -> Result<Self> {
        Self::quadratic_with_tilt(m, c, &[])
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn text(&self) -> String {
        self.formula.to_text()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// SHA-256 of the formula text and the declared constant.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.text().as_bytes());
        h.update(self.c.to_le_bytes());
        h.update((self.m as u64).to_le_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn check_shape(&self, x: &MatrixTuple) -> Result<()> {
        if x.m() != self.m {
            return Err(Error::DimensionMismatch(format!("tuple of length {} for m = {}", x.m(), self.m)));
        }
        Ok(())
    }

    pub fn value(&self, x: &MatrixTuple) -> Result<f64> {
        self.check_shape(x)?;
        evaluate(&self.formula, x, &EvalOptions::default())
    }

    /// `φ(X)` and the gradient `G` with `dφ(X)[H] = re ⟨G, H⟩`.
    pub fn value_and_gradient(&self, x: &MatrixTuple) -> Result<(f64, MatrixTuple)> {
        self.check_shape(x)?;
        value_and_gradient(&self.formula, x)
    }

    /// The potential as a function for the convexity checkers; evaluation
    /// errors become NaN.
    pub fn scalar_fn(&self) -> ScalarFn<MatrixTuple> {
        let (f, g) = (self.clone(), self.clone());
        ScalarFn::new(move |x: &MatrixTuple| f.value(x).unwrap_or(f64::NAN))
            .with_gradient(move |x: &MatrixTuple| match g.value_and_gradient(x) {
                Ok((_, grad)) => grad,
                Err(_) => x.scale(f64::NAN),
            })
            .with_bounds(self.c, f64::INFINITY)
    }

    /// Midpoint check that `φ - (c/2)‖·‖²` is convex on `samples` random
    /// triples at the Gibbs scale `‖X‖ ~ (2m/c)^{1/2}`.
    pub fn convexity_spot_check(&self, n: usize, samples: usize, seed: Seed) -> ViolationReport {
        let mut rng = seed.rng();
        let scale = 1.0 / (n as f64 * self.c.sqrt());
        let triples: Vec<(MatrixTuple, MatrixTuple, f64)> = (0..samples)
            .map(|_| {
                let x = standard_gaussian_tuple(n, self.m, &mut rng).scale(scale);
                let y = standard_gaussian_tuple(n, self.m, &mut rng).scale(scale);
                (x, y, rng.random_range(0.0..=1.0))
            })
            .collect();
        check_strong_convexity(&self.scalar_fn(), self.c, &triples)
    }
}
