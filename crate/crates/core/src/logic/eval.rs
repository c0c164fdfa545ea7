//! Formula evaluation on matrix tuples.
//!
//! Atoms and connectives are computed exactly. A quantifier `sup{y:R}` is
//! approximated by projected gradient ascent over the operator-norm ball
//! (projection = singular-value clipping) from several starts, keeping the best
//! value seen. The result is therefore a lower bound for `sup` and an upper
//! bound for `inf`, up to optimizer error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{complex_gaussian_matrix, CMatrix, MatrixTuple, Seed, C64};

use super::formula::{BinaryOp, Formula, QuantKind, UnaryOp};
use super::poly::{StackEnv, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Multistart count per quantifier: `0`, `R·I`, then random points.
    pub starts: usize,
    /// Maximal accepted ascent steps per start.
    pub iters: usize,
    /// Initial step size in the tr_n metric.
    pub step: f64,
    /// Stop when an accepted step moves less than `tol · max(R, 1)`.
    pub tol: f64,
    pub seed: Seed,
    /// Deepest allowed quantifier nesting.
    pub depth_cap: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            iters: 200,
            step: 1.0,
            tol: 1e-10,
            seed: Seed::new(0, 0),
            depth_cap: 2,
        }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.iters == 0 {
            return Err(Error::InvalidArgument("starts and iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !(self.step > 0.0) {
            return Err(Error::InvalidArgument("tol and step must be positive".into()));
        }
        Ok(())
    }
}

/// Relative step for central differences through nested quantifiers.
const FD_STEP: f64 = 1e-5;
const MAX_HALVINGS: usize = 40;

fn check_finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

struct Evaluator<'a> {
    free: &'a [CMatrix],
    n: usize,
    opts: &'a EvalOptions,
}

impl Evaluator<'_> {
    fn value(&self, f: &Formula, bound: &mut Vec<CMatrix>) -> Result<f64> {
        match f {
            Formula::Const(v) => Ok(*v),
            Formula::Atom(p) => {
                let env = StackEnv {
                    free: self.free,
                    bound,
                };
                check_finite(p.trace(&env).re, "atom")
            }
            Formula::Quant {
                kind, radius, body, ..
            } => Ok(self.optimize(*kind, *radius, body, bound)?.0),
            Formula::Unary(op, a) => {
                let v = self.value(a, bound)?;
                unary_value(*op, v)
            }
            Formula::Binary(op, a, b) => {
                let x = self.value(a, bound)?;
                let y = self.value(b, bound)?;
                binary_value(*op, x, y)
            }
            Formula::Pow(a, p) => pow_value(self.value(a, bound)?, *p),
        }
    }

    /// Value and tr_n-gradients with respect to `targets`, for quantifier-free
    /// formulas (chain rule through the connectives).
    fn value_grad(
        &self,
        f: &Formula,
        bound: &[CMatrix],
        targets: &[Var],
    ) -> Result<(f64, Vec<CMatrix>)> {
        let zeros = || vec![CMatrix::zeros(self.n); targets.len()];
        match f {
            Formula::Const(v) => Ok((*v, zeros())),
            Formula::Atom(p) => {
                let env = StackEnv {
                    free: self.free,
                    bound,
                };
                let v = check_finite(p.trace(&env).re, "atom")?;
                let g = targets
                    .iter()
                    .map(|t| p.re_trace_gradient(&env, *t))
                    .collect();
                Ok((v, g))
            }
            Formula::Quant { .. } => Err(Error::Unsupported(
                "analytic gradient through a quantifier".into(),
            )),
            Formula::Unary(op, a) => {
                let (v, g) = self.value_grad(a, bound, targets)?;
                let out = unary_value(*op, v)?;
                let d = match op {
                    UnaryOp::Neg => -1.0,
                    UnaryOp::Abs => {
                        if v > 0.0 {
                            1.0
                        } else if v < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    UnaryOp::Sqrt => {
                        if out > 0.0 {
                            0.5 / out
                        } else {
                            0.0
                        }
                    }
                    UnaryOp::Exp => out,
                    UnaryOp::Log => 1.0 / v,
                };
                Ok((out, scale_all(g, d)))
            }
            Formula::Binary(op, a, b) => {
                let (x, gx) = self.value_grad(a, bound, targets)?;
                let (y, gy) = self.value_grad(b, bound, targets)?;
                let out = binary_value(*op, x, y)?;
                let (dx, dy) = match op {
                    BinaryOp::Add => (1.0, 1.0),
                    BinaryOp::Sub => (1.0, -1.0),
                    BinaryOp::Mul => (y, x),
                    BinaryOp::Div => (1.0 / y, -x / (y * y)),
                    BinaryOp::Max => {
                        if x >= y {
                            (1.0, 0.0)
                        } else {
                            (0.0, 1.0)
                        }
                    }
                    BinaryOp::Min => {
                        if x <= y {
                            (1.0, 0.0)
                        } else {
                            (0.0, 1.0)
                        }
                    }
                };
                let g = gx
                    .into_iter()
                    .zip(gy)
                    .map(|(a, b)| {
                        let mut r = a.scale_re(dx);
                        r.axpy(C64::new(dy, 0.0), &b);
                        r
                    })
                    .collect();
                Ok((out, g))
            }
            Formula::Pow(a, p) => {
                let (v, g) = self.value_grad(a, bound, targets)?;
                let out = pow_value(v, *p)?;
                let d = if v == 0.0 {
                    if *p == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    p * v.powf(p - 1.0)
                };
                Ok((out, scale_all(g, d)))
            }
        }
    }

    /// Gradient with respect to the innermost bound variable.
    fn body_value_grad(&self, body: &Formula, bound: &mut Vec<CMatrix>, radius: f64) -> Result<(f64, CMatrix)> {
        let level = bound.len() - 1;
        if body.is_quantifier_free() {
            let (v, mut g) = self.value_grad(body, bound, &[Var::Bound(level)])?;
            return Ok((v, g.pop().expect("one target")));
        }
        let v = self.value(body, bound)?;
        let h = FD_STEP * radius;
        let n = self.n;
        let mut g = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for unit in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                    let orig = bound[level].get(i, j);
                    bound[level].set(i, j, orig + unit * h);
                    let up = self.value(body, bound)?;
                    bound[level].set(i, j, orig - unit * h);
                    let down = self.value(body, bound)?;
                    bound[level].set(i, j, orig);
                    // re tr_n(G^* E_ij) = re(G_ij)/n and likewise for i E_ij
                    let d = n as f64 * (up - down) / (2.0 * h);
                    let cur = g.get(i, j);
                    g.set(i, j, cur + unit * d);
                }
            }
        }
        Ok((v, g))
    }

    fn starts(&self, radius: f64, level: usize) -> Vec<CMatrix> {
        let n = self.n;
        let mut out = vec![CMatrix::zeros(n), CMatrix::scalar(n, C64::new(radius, 0.0))];
        let mut k = 0u64;
        while out.len() < self.opts.starts {
            let seed = self.opts.seed.derive(level as u64).derive(k);
            let mut rng = seed.rng();
            let g = complex_gaussian_matrix(n, 1.0 / n as f64, &mut rng);
            // spread random starts over the ball
            let scale = radius * 0.5;
            out.push(g.scale_re(scale).clip_singular_values(radius));
            k += 1;
        }
        out.truncate(self.opts.starts);
        out
    }

    /// Best value of the quantified body and the point achieving it.
    fn optimize(
        &self,
        kind: QuantKind,
        radius: f64,
        body: &Formula,
        bound: &mut Vec<CMatrix>,
    ) -> Result<(f64, CMatrix)> {
        let sign = match kind {
            QuantKind::Sup => 1.0,
            QuantKind::Inf => -1.0,
        };
        let level = bound.len();
        let mut best: Option<(f64, CMatrix)> = None;
        for start in self.starts(radius, level) {
            bound.push(start);
            let result = self.ascend(sign, radius, body, bound);
            bound.pop();
            let (v, arg) = result?;
            if best.as_ref().is_none_or(|(b, _)| sign * v > sign * b) {
                best = Some((v, arg));
            }
        }
        Ok(best.expect("at least one start"))
    }

    /// Projected ascent of `sign * body` in the innermost bound slot.
    fn ascend(
        &self,
        sign: f64,
        radius: f64,
        body: &Formula,
        bound: &mut Vec<CMatrix>,
    ) -> Result<(f64, CMatrix)> {
        let level = bound.len() - 1;
        let (mut v, mut g) = self.body_value_grad(body, bound, radius)?;
        let mut eta = self.opts.step;
        for _ in 0..self.opts.iters {
            let y = bound[level].clone();
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                let mut cand = y.clone();
                cand.axpy(C64::new(sign * eta, 0.0), &g);
                let cand = cand.clip_singular_values(radius);
                bound[level] = cand;
                let cv = self.value(body, bound)?;
                if sign * cv > sign * v {
                    let moved = (&bound[level] - &y).norm_sq().sqrt();
                    v = cv;
                    accepted = true;
                    eta *= 2.0;
                    if moved <= self.opts.tol * radius.max(1.0) {
                        return Ok((v, bound[level].clone()));
                    }
                    break;
                }
                eta *= 0.5;
            }
            if !accepted {
                bound[level] = y;
                break;
            }
            g = self.body_value_grad(body, bound, radius)?.1;
        }
        Ok((v, bound[level].clone()))
    }
}

fn scale_all(g: Vec<CMatrix>, d: f64) -> Vec<CMatrix> {
    g.into_iter().map(|m| m.scale_re(d)).collect()
}

fn unary_value(op: UnaryOp, v: f64) -> Result<f64> {
    let out = match op {
        UnaryOp::Neg => -v,
        UnaryOp::Abs => v.abs(),
        UnaryOp::Sqrt => {
            if v < 0.0 {
                return Err(Error::Domain(format!("sqrt of negative value {v}")));
            }
            v.sqrt()
        }
        UnaryOp::Exp => v.exp(),
        UnaryOp::Log => {
            if v <= 0.0 {
                return Err(Error::Domain(format!("log of nonpositive value {v}")));
            }
            v.ln()
        }
    };
    check_finite(out, "connective")
}

fn binary_value(op: BinaryOp, x: f64, y: f64) -> Result<f64> {
    let out = match op {
        BinaryOp::Add => x + y,
        BinaryOp::Sub => x - y,
        BinaryOp::Mul => x * y,
        BinaryOp::Div => {
            if y == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            x / y
        }
        BinaryOp::Max => x.max(y),
        BinaryOp::Min => x.min(y),
    };
    check_finite(out, "connective")
}

fn pow_value(v: f64, p: f64) -> Result<f64> {
    if v < 0.0 && p.fract() != 0.0 {
        return Err(Error::Domain(format!("{v} raised to non-integer power {p}")));
    }
    if v == 0.0 && p < 0.0 {
        return Err(Error::Domain(format!("zero raised to negative power {p}")));
    }
    check_finite(v.powf(p), "power")
}

fn prepare<'a>(f: &Formula, x: &'a MatrixTuple, opts: &'a EvalOptions) -> Result<Evaluator<'a>> {
    opts.validate()?;
    if f.free_arity() > x.m() {
        return Err(Error::DimensionMismatch(format!(
            "formula uses {} free variables but the tuple has {}",
            f.free_arity(),
            x.m()
        )));
    }
    if f.quantifier_depth() > opts.depth_cap {
        return Err(Error::Unsupported(format!(
            "quantifier depth {} exceeds cap {}",
            f.quantifier_depth(),
            opts.depth_cap
        )));
    }
    Ok(Evaluator {
        free: x.mats(),
        n: x.n(),
        opts,
    })
}

/// Evaluates `f` at `x`.
pub fn evaluate(f: &Formula, x: &MatrixTuple, opts: &EvalOptions) -> Result<f64> {
    let ev = prepare(f, x, opts)?;
    ev.value(f, &mut Vec::new())
}

/// For a formula whose root is a quantifier: the optimized value and the
/// best point found.
pub fn optimize_quantifier(
    f: &Formula,
    x: &MatrixTuple,
    opts: &EvalOptions,
) -> Result<(f64, CMatrix)> {
    let ev = prepare(f, x, opts)?;
    match f {
        Formula::Quant {
            kind, radius, body, ..
        } => ev.optimize(*kind, *radius, body, &mut Vec::new()),
        _ => Err(Error::InvalidArgument("root is not a quantifier".into())),
    }
}

/// Value and tr_n-gradient in every free slot of a quantifier-free formula.
pub fn value_and_gradient(f: &Formula, x: &MatrixTuple) -> Result<(f64, MatrixTuple)> {
    if !f.is_quantifier_free() {
        return Err(Error::Unsupported(
            "gradients of quantified formulas".into(),
        ));
    }
    let opts = EvalOptions::default();
    let ev = prepare(f, x, &opts)?;
    let targets: Vec<Var> = (0..x.m()).map(Var::Free).collect();
    let (v, g) = ev.value_grad(f, &[], &targets)?;
    Ok((v, MatrixTuple::new(g)?))
}
