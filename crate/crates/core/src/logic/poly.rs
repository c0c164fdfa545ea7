//! Non-commutative *-polynomials in free and bound matrix variables.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::matcore::{CMatrix, C64};

/// A matrix variable: `Free(j)` is `x_{j+1}`; `Bound(k)` is the variable of
/// the quantifier at nesting level `k` (outermost is 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Free(usize),
    Bound(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub var: Var,
    pub adj: bool,
}

impl Letter {
    pub fn new(var: Var, adj: bool) -> Self {
        Self { var, adj }
    }

    pub fn free(j: usize) -> Self {
        Self::new(Var::Free(j), false)
    }

    pub fn star(self) -> Self {
        Self::new(self.var, !self.adj)
    }
}

pub type Word = Vec<Letter>;

/// `w^*`: reversed with every letter starred.
pub fn adjoint_word(w: &[Letter]) -> Word {
    w.iter().rev().map(|l| l.star()).collect()
}

/// Looks up the matrix bound to a variable.
pub trait VarEnv {
    fn matrix(&self, v: Var) -> &CMatrix;
    fn size(&self) -> usize;
}

fn letter_matrix<E: VarEnv + ?Sized>(env: &E, l: Letter) -> CMatrix {
    let a = env.matrix(l.var);
    if l.adj {
        a.adjoint()
    } else {
        a.clone()
    }
}

/// Product of the letters of `w`; the empty word gives the identity.
pub fn eval_word<E: VarEnv + ?Sized>(env: &E, w: &[Letter]) -> CMatrix {
    match w.split_first() {
        None => CMatrix::identity(env.size()),
        Some((first, rest)) => rest
            .iter()
            .fold(letter_matrix(env, *first), |acc, l| acc.matmul(&letter_matrix(env, *l))),
    }
}

/// `tr_n(w(X))`, forming one product fewer than [`eval_word`].
pub fn trace_word<E: VarEnv + ?Sized>(env: &E, w: &[Letter]) -> C64 {
    match w.len() {
        0 => C64::new(1.0, 0.0),
        1 => letter_matrix(env, w[0]).tr_n(),
        k => eval_word(env, &w[..k - 1]).tr_n_product(&letter_matrix(env, w[k - 1])),
    }
}

/// Finite sum of complex multiples of words, stored with zero terms removed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NcPolynomial {
    terms: BTreeMap<Word, C64>,
}

impl NcPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(z: C64) -> Self {
        Self::monomial(z, Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Self::monomial(C64::new(1.0, 0.0), vec![Letter::new(v, false)])
    }

    pub fn monomial(z: C64, w: Word) -> Self {
        let mut p = Self::zero();
        p.add_term(w, z);
        p
    }

    fn add_term(&mut self, w: Word, z: C64) {
        let zero = C64::new(0.0, 0.0);
        match self.terms.entry(w) {
            Entry::Vacant(e) => {
                if z != zero {
                    e.insert(z);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += z;
                if *e.get() == zero {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, z) in &other.terms {
            out.add_term(w.clone(), *z);
        }
        out
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c * z);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                out.add_term(w, c1 * c2);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.add_term(adjoint_word(w), c.conj());
        }
        out
    }

    /// True when `p^* = p` up to `tol` in every coefficient.
    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        let d = self.sub(&self.adjoint());
        d.terms.values().all(|z| z.norm() <= tol)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.terms.keys().flat_map(|w| w.iter().map(|l| l.var))
    }

    pub fn eval<E: VarEnv + ?Sized>(&self, env: &E) -> CMatrix {
        let mut out = CMatrix::zeros(env.size());
        for (w, c) in &self.terms {
            out.axpy(*c, &eval_word(env, w));
        }
        out
    }

    /// `tr_n(p(X))`.
    pub fn trace<E: VarEnv + ?Sized>(&self, env: &E) -> C64 {
        self.terms.iter().map(|(w, c)| c * trace_word(env, w)).sum()
    }

    /// Gradient of `X ↦ re tr_n(p(X))` with respect to `target`, in the tr_n
    /// metric: the `G` with `d/ds re tr_n(p(X + sH)) = re tr_n(G^* H)`.
    ///
    /// For an occurrence `L_1..L_{i-1} x L_{i+1}..L_k` the derivative in
    /// direction `H` is `tr_n(H B)` with `B = L_{i+1}..L_k L_1..L_{i-1}`
    /// (cyclic rotation), giving `G = conj(c) B^*`; a starred occurrence
    /// gives `tr_n(H^* B)` and `G = c B`.
    pub fn re_trace_gradient<E: VarEnv + ?Sized>(&self, env: &E, target: Var) -> CMatrix {
        let n = env.size();
        let mut g = CMatrix::zeros(n);
        for (w, c) in &self.terms {
            if !w.iter().any(|l| l.var == target) {
                continue;
            }
            let mats: Vec<CMatrix> = w.iter().map(|l| letter_matrix(env, *l)).collect();
            let k = w.len();
            // prefix[i] = L_0..L_{i-1}, suffix[i] = L_{i+1}..L_{k-1}
            let mut prefix = Vec::with_capacity(k);
            let mut acc = CMatrix::identity(n);
            for a in &mats {
                prefix.push(acc.clone());
                acc = acc.matmul(a);
            }
            let mut suffix = vec![CMatrix::identity(n); k];
            let mut acc = CMatrix::identity(n);
            for i in (0..k).rev() {
                suffix[i] = acc.clone();
                acc = mats[i].matmul(&acc);
            }
            for (i, l) in w.iter().enumerate() {
                if l.var != target {
                    continue;
                }
                let b = suffix[i].matmul(&prefix[i]);
                if l.adj {
                    g.axpy(*c, &b);
                } else {
                    g.axpy(c.conj(), &b.adjoint());
                }
            }
        }
        g
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

/// Complex coefficient in the polynomial grammar.
pub(crate) fn fmt_coefficient(z: C64) -> String {
    if z.im == 0.0 {
        fmt_real(z.re)
    } else if z.re == 0.0 {
        format!("{}i", fmt_real(z.im))
    } else {
        format!("({} + {}i)", fmt_real(z.re), fmt_real(z.im))
    }
}

pub(crate) fn fmt_letter(l: &Letter, bound_names: &[String]) -> String {
    let base = match l.var {
        Var::Free(j) => format!("x{}", j + 1),
        Var::Bound(k) => bound_names
            .get(k)
            .cloned()
            .unwrap_or_else(|| format!("_b{k}")),
    };
    if l.adj {
        format!("{base}'")
    } else {
        base
    }
}

impl NcPolynomial {
    pub(crate) fn to_text(&self, bound_names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0.0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(w, c)| {
                let letters: Vec<String> = w.iter().map(|l| fmt_letter(l, bound_names)).collect();
                if w.is_empty() {
                    fmt_coefficient(*c)
                } else if *c == C64::new(1.0, 0.0) {
                    letters.join(" * ")
                } else {
                    format!("{} * {}", fmt_coefficient(*c), letters.join(" * "))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl fmt::Display for NcPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(&[]))
    }
}

/// Environment made of the free tuple and a stack of bound matrices.
pub struct StackEnv<'a> {
    pub free: &'a [CMatrix],
    pub bound: &'a [CMatrix],
}

impl VarEnv for StackEnv<'_> {
    fn matrix(&self, v: Var) -> &CMatrix {
        match v {
            Var::Free(j) => &self.free[j],
            Var::Bound(k) => &self.bound[k],
        }
    }

    fn size(&self) -> usize {
        self.free
            .first()
            .or(self.bound.first())
            .map(CMatrix::n)
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(j: usize) -> NcPolynomial {
        NcPolynomial::var(Var::Free(j))
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = x(0).add(&x(1)).sub(&x(0));
        assert_eq!(p, x(1));
        assert!(x(0).sub(&x(0)).is_zero());
    }

    #[test]
    fn adjoint_is_involutive() {
        let p = x(0)
            .mul(&x(1).adjoint())
            .scale(C64::new(2.0, -1.0))
            .add(&NcPolynomial::constant(C64::new(0.5, 3.0)));
        assert_eq!(p.adjoint().adjoint(), p);
        assert!(!p.is_self_adjoint(1e-14));
        let h = x(0).adjoint().mul(&x(0));
        assert!(h.is_self_adjoint(0.0));
    }

    #[test]
    fn gradient_of_trace_of_variable_is_identity() {
        let a = CMatrix::diag_real(&[1.0, 2.0]);
        let env = StackEnv { free: std::slice::from_ref(&a), bound: &[] };
        let g = x(0).re_trace_gradient(&env, Var::Free(0));
        assert_eq!(g, CMatrix::identity(2));
    }

    #[test]
    fn text_form() {
        let p = x(0).adjoint().mul(&x(1)).scale(C64::new(-2.0, 0.0));
        assert_eq!(p.to_string(), "-2.0 * x1' * x2");
        assert_eq!(NcPolynomial::constant(C64::new(0.0, 1.5)).to_string(), "1.5i");
    }
}
