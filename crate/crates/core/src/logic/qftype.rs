//! Quantifier-free types: the table of *-moments `tr_n(w(X))` up to a degree.
//!
//! Only one representative per class of words under cyclic rotation and
//! adjoint is computed. Lookups of any other word go through its class
//! representative, so traciality and `moment(w^*) = conj(moment(w))` hold
//! exactly rather than up to rounding.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matcore::{MatrixTuple, C64};

use super::poly::{adjoint_word, fmt_letter, trace_word, Letter, StackEnv, Var, Word};

#[derive(Clone, Debug, PartialEq)]
pub struct QfType {
    degree: usize,
    m: usize,
    moments: BTreeMap<Word, C64>,
}

fn min_rotation(src: &[Letter]) -> Word {
    (0..src.len().max(1))
        .map(|r| {
            let r = r.min(src.len());
            let mut rot = src[r..].to_vec();
            rot.extend_from_slice(&src[..r]);
            rot
        })
        .min()
        .expect("at least one rotation")
}

/// Class representative of `w` and whether its moment is the conjugate of the
/// stored one.
fn canonical(w: &[Letter]) -> (Word, bool) {
    let direct = min_rotation(w);
    let starred = min_rotation(&adjoint_word(w));
    if starred < direct {
        (starred, true)
    } else {
        (direct, false)
    }
}

/// Whether `w^*` is a rotation of `w`, which forces a real moment.
fn is_self_conjugate_class(key: &[Letter]) -> bool {
    min_rotation(&adjoint_word(key)) == min_rotation(key)
}

fn all_words(m: usize, degree: usize) -> Vec<Word> {
    let letters: Vec<Letter> = (0..m)
        .flat_map(|j| [Letter::new(Var::Free(j), false), Letter::new(Var::Free(j), true)])
        .collect();
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Word> = vec![Vec::new()];
    for _ in 0..degree {
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for w in &layer {
            for l in &letters {
                let mut v = w.clone();
                v.push(*l);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

impl QfType {
    /// Number of tuple entries the type describes.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `tr_n(w(X))` for `|w| ≤ degree`; `None` for longer words or unknown letters.
    pub fn moment(&self, w: &[Letter]) -> Option<C64> {
        if w.len() > self.degree
            || w
                .iter()
                .any(|l| !matches!(l.var, Var::Free(j) if j < self.m))
        {
            return None;
        }
        let (key, conj) = canonical(w);
        let v = *self.moments.get(&key)?;
        Some(if conj { v.conj() } else { v })
    }

    /// Every word of length at most the degree.
    pub fn words(&self) -> Vec<Word> {
        all_words(self.m, self.degree)
    }

    /// Number of distinct stored class representatives.
    pub fn class_count(&self) -> usize {
        self.moments.len()
    }

    /// Word in the formula syntax, e.g. `x1' * x2`; the empty word prints as `1`.
    pub fn word_text(w: &[Letter]) -> String {
        if w.is_empty() {
            return "1".into();
        }
        w.iter()
            .map(|l| fmt_letter(l, &[]))
            .collect::<Vec<_>>()
            .join(" * ")
    }
}

/// The *-moments of `x` up to `max_degree`.
pub fn qf_type(x: &MatrixTuple, max_degree: usize) -> QfType {
    let env = StackEnv {
        free: x.mats(),
        bound: &[],
    };
    let mut moments = BTreeMap::new();
    for w in all_words(x.m(), max_degree) {
        let (key, _) = canonical(&w);
        if moments.contains_key(&key) {
            continue;
        }
        let v = if key.is_empty() {
            C64::new(1.0, 0.0)
        } else if is_self_conjugate_class(&key) {
            C64::new(trace_word(&env, &key).re, 0.0)
        } else {
            trace_word(&env, &key)
        };
        moments.insert(key, v);
    }
    QfType {
        degree: max_degree,
        m: x.m(),
        moments,
    }
}

/// Per-word weights for [`qf_distance`].
#[derive(Clone, Debug, PartialEq)]
pub enum QfWeights {
    Uniform,
    /// Weight `w_k` for words of length `k`; missing lengths weigh 0.
    ByLength(Vec<f64>),
}

impl QfWeights {
    fn weight(&self, len: usize) -> f64 {
        match self {
            QfWeights::Uniform => 1.0,
            QfWeights::ByLength(w) => w.get(len).copied().unwrap_or(0.0),
        }
    }
}

/// Weighted sup of moment differences over all words up to the common degree.
pub fn qf_distance(a: &QfType, b: &QfType, weights: &QfWeights) -> Result<f64> {
    if a.degree != b.degree || a.m != b.m {
        return Err(Error::DimensionMismatch(format!(
            "types of (degree {}, m {}) and (degree {}, m {})",
            a.degree, a.m, b.degree, b.m
        )));
    }
    let mut worst: f64 = 0.0;
    for (key, va) in &a.moments {
        let vb = b.moments[key];
        worst = worst.max(weights.weight(key.len()) * (va - vb).norm());
    }
    Ok(worst)
}
