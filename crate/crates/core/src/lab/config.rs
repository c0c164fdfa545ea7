//! Flat `key = value` run configurations with typed, per-experiment schemas.
//!
//! ```text
//! # Talagrand equality case
//! experiment = talagrand
//! n = 8
//! tilt = 0.4, -0.1+0.2i
//! ```
//!
//! Lines starting with `#` are comments. Lists are comma separated, except
//! text lists (formulas), which are separated by `;`. Every key is checked
//! against the experiment's schema and defaults are filled in, so a parsed
//! config is complete and valid before any computation starts.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{Seed, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Text,
    Ints,
    Floats,
    Complexes,
    Texts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Any,
    Positive,
    NonNegative,
    /// Open interval `(0, 1)`.
    Unit,
}

#[derive(Clone, Copy, Debug)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub check: Check,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn p(key: &'static str, kind: Kind, check: Check, default: Option<&'static str>, help: &'static str) -> Param {
    Param {
        key,
        kind,
        check,
        default,
        help,
    }
}

use Check::{Any, NonNegative, Positive, Unit};
use Kind::{Complexes, Float, Floats, Int, Ints, Text, Texts};

const SEED: Param = p("seed", Int, NonNegative, Some("0"), "master seed");

const COUNTEREXAMPLE: &[Param] = &[
    p("epsilon", Float, Unit, Some("0.01"), "mixing parameter ε"),
    p("k", Int, Positive, Some("8"), "size of the GUE(k) factor"),
    p("l", Int, Positive, Some("8"), "size of the GUE(l) factor; n = k l"),
    p("samples", Int, Positive, Some("50"), "independent draws"),
    p("scaling_epsilons", Floats, Unit, Some("0.04, 0.01, 0.0025"), "ε values for the commutator scaling fit"),
    SEED,
];

const TALAGRAND: &[Param] = &[
    p("potential", Text, Any, Some("0.5*tr(x1'*x1)"), "strongly convex quantifier-free potential φ"),
    p("c", Float, Positive, Some("1"), "convexity constant of φ"),
    p("m", Int, Positive, Some("1"), "number of matrix variables"),
    p("tilt", Complexes, Any, Some("0.4"), "scalar tilt a_j; ν ∝ exp(-n²(φ + re⟨a, X⟩))"),
    p("n", Int, Positive, Some("8"), "matrix size"),
    p("samples", Int, Positive, Some("300"), "coupled samples per measure"),
    p("nodes", Int, Positive, Some("16"), "Gauss–Legendre nodes for log Z_ν − log Z_μ"),
    p("ladder_samples", Int, Positive, Some("300"), "samples per ladder node"),
    p("coupling_step_fraction", Float, Unit, Some("0.1"), "coupled-chain step as a fraction of the tuned step"),
    SEED,
];

const GEODESIC: &[Param] = &[
    p("dim", Int, Positive, Some("2"), "real dimension d ≤ 4"),
    p("cov0", Floats, Any, Some(""), "start covariance: d diagonal entries or d² row-major (empty: identity)"),
    p("cov1", Floats, Any, Some(""), "end covariance (empty: 4 × identity)"),
    p("grid", Floats, Unit, Some("0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9"), "interpolation times"),
    p("samples", Int, Positive, Some("5000"), "points for the nearest-neighbour estimates"),
    p("neighbours", Int, Positive, Some("3"), "k of the Kozachenko–Leonenko estimator"),
    p("slack", Float, NonNegative, Some("0.05"), "allowed violation of the sandwich in nats"),
    SEED,
];

const MOMENT: &[Param] = &[
    p("mu", Text, Any, Some("delta0"), "source measure: delta0, gaussian or atoms"),
    p("atoms", Floats, Any, Some(""), "atom locations when mu = atoms (uniform weights)"),
    p("mu_atoms", Int, Positive, Some("400"), "atoms of the discretized N(0,1) when mu = gaussian"),
    p("t", Float, Positive, Some("1"), "weight of the quadratic term"),
    p("iterations", Int, Positive, Some("25"), "alternating steps"),
    p("grid_points", Int, Positive, Some("4001"), "points of the density grid"),
    p("half_width", Float, NonNegative, Some("0"), "grid half-width (0: automatic)"),
    p("quantile_points", Int, Positive, Some("2000"), "quantile discretization of ν_k"),
    p("w2_tolerance", Float, Positive, Some("0.01"), "W2 tolerance against a Gaussian oracle"),
    p("monotone_slack", Float, NonNegative, Some("0.02"), "allowed decrease of the objective per step"),
    SEED,
];

const QFCONV: &[Param] = &[
    p("potential", Text, Any, Some("0.5*tr(x1'*x1)"), "Gibbs potential"),
    p("c", Float, Positive, Some("1"), "convexity constant"),
    p("m", Int, Positive, Some("1"), "number of matrix variables"),
    p("formulas", Texts, Any, Some("re tr(x1*x1'); re tr(x1); 1"), "quantifier-free formulas"),
    p("ns", Ints, Positive, Some("8, 16, 32, 64"), "matrix sizes, increasing"),
    p("samples", Int, Positive, Some("200"), "samples per size"),
    p("rate_bound", Float, Positive, Some("3"), "allowed max/min ratio of std·n along the ladder"),
    SEED,
];

const SAMPLE: &[Param] = &[
    p("potential", Text, Any, Some("0.5*tr(x1'*x1)"), "Gibbs potential"),
    p("c", Float, Positive, Some("1"), "convexity constant"),
    p("m", Int, Positive, Some("1"), "number of matrix variables"),
    p("n", Int, Positive, Some("8"), "matrix size"),
    p("samples", Int, Positive, Some("500"), "ensemble size"),
    p("chains", Int, Positive, Some("4"), "parallel chains"),
    p("output", Text, Any, Some("ensemble.fige"), "ensemble file (relative to --out)"),
    SEED,
];

const ENTROPY: &[Param] = &[
    p("potential", Text, Any, Some("0.5*tr(x1'*x1)"), "Gibbs potential"),
    p("c", Float, Positive, Some("1"), "convexity constant"),
    p("m", Int, Positive, Some("1"), "number of matrix variables"),
    p("n", Int, Positive, Some("4"), "matrix size"),
    p("samples", Int, Positive, Some("400"), "samples per ladder node"),
    p("nodes", Int, Positive, Some("16"), "Gauss–Legendre nodes"),
    SEED,
];

const EVAL: &[Param] = &[
    p("formula", Text, Any, None, "formula to evaluate"),
    p("input", Text, Any, None, "FIGE ensemble file"),
];

const W2: &[Param] = &[
    p("a", Text, Any, None, "first FIGE ensemble"),
    p("b", Text, Any, None, "second FIGE ensemble"),
    p("method", Text, Any, Some("exact"), "exact or sinkhorn"),
    p("sinkhorn_epsilon", Float, NonNegative, Some("0"), "sinkhorn regularization (0: 1% of the median cost)"),
];

pub const EXPERIMENTS: &[&str] = &[
    "counterexample",
    "talagrand",
    "geodesic",
    "moment",
    "qfconv",
    "sample",
    "entropy",
    "eval",
    "w2",
];

/// The schema of `experiment`.
pub fn schema(experiment: &str) -> Result<&'static [Param]> {
    Ok(match experiment {
        "counterexample" => COUNTEREXAMPLE,
        "talagrand" => TALAGRAND,
        "geodesic" => GEODESIC,
        "moment" => MOMENT,
        "qfconv" => QFCONV,
        "sample" => SAMPLE,
        "entropy" => ENTROPY,
        "eval" => EVAL,
        "w2" => W2,
        other => {
            return Err(Error::Config(format!(
                "unknown experiment `{other}` (expected one of {})",
                EXPERIMENTS.join(", ")
            )))
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(u64),
    Float(f64),
    Text(String),
    Ints(Vec<u64>),
    Floats(Vec<f64>),
    Complexes(Vec<[f64; 2]>),
    Texts(Vec<String>),
}

fn parse_list<T>(raw: &str, key: &str, sep: char, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    raw.split(sep)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).ok_or_else(|| Error::Config(format!("`{key}`: cannot parse `{s}`"))))
        .collect()
}

fn parse_value(param: &Param, raw: &str) -> Result<Value> {
    let key = param.key;
    let raw = raw.trim();
    let bad = || Error::Config(format!("`{key}`: cannot parse `{raw}` as {:?}", param.kind));
    let value = match param.kind {
        Kind::Int => Value::Int(raw.parse().map_err(|_| bad())?),
        Kind::Float => Value::Float(raw.parse().map_err(|_| bad())?),
        Kind::Text => Value::Text(raw.to_string()),
        Kind::Ints => Value::Ints(parse_list(raw, key, ',', |s| s.parse().ok())?),
        Kind::Floats => Value::Floats(parse_list(raw, key, ',', |s| s.parse().ok())?),
        Kind::Complexes => Value::Complexes(parse_list(raw, key, ',', |s| {
            C64::from_str(s).ok().map(|z| [z.re, z.im])
        })?),
        Kind::Texts => Value::Texts(parse_list(raw, key, ';', |s| Some(s.to_string()))?),
    };
    check_value(param, &value)?;
    Ok(value)
}

fn check_value(param: &Param, value: &Value) -> Result<()> {
    let nums: Vec<f64> = match value {
        Value::Int(v) => vec![*v as f64],
        Value::Float(v) => vec![*v],
        Value::Ints(v) => v.iter().map(|x| *x as f64).collect(),
        Value::Floats(v) => v.clone(),
        Value::Complexes(v) => v.iter().flatten().copied().collect(),
        Value::Text(_) | Value::Texts(_) => Vec::new(),
    };
    for x in nums {
        let ok = x.is_finite()
            && match param.check {
                Check::Any => true,
                Check::Positive => x > 0.0,
                Check::NonNegative => x >= 0.0,
                Check::Unit => x > 0.0 && x < 1.0,
            };
        if !ok {
            return Err(Error::Config(format!("`{}` = {x} violates {:?}", param.key, param.check)));
        }
    }
    Ok(())
}

type Lines = (Option<String>, Vec<(String, String)>);

fn split_lines(text: &str) -> Result<Lines> {
    let mut experiment = None;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "experiment" {
            if experiment.replace(value.to_string()).is_some() {
                return Err(Error::Config("duplicate key `experiment`".into()));
            }
        } else {
            pairs.push((key.to_string(), value.to_string()));
        }
    }
    Ok((experiment, pairs))
}

/// A validated experiment configuration: every schema key has a value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
}

impl RunConfig {
    /// Builds a config from raw `key = value` pairs, filling defaults.
    pub fn from_pairs(experiment: &str, pairs: &[(&str, &str)]) -> Result<Self> {
        let params = schema(experiment)?;
        let mut values = BTreeMap::new();
        for (key, raw) in pairs {
            let param = params
                .iter()
                .find(|p| p.key == *key)
                .ok_or_else(|| Error::Config(format!("unknown key `{key}` for experiment `{experiment}`")))?;
            if values.insert(key.to_string(), parse_value(param, raw)?).is_some() {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
        }
        for param in params {
            if values.contains_key(param.key) {
                continue;
            }
            let raw = param
                .default
                .ok_or_else(|| Error::Config(format!("missing required key `{}`", param.key)))?;
            values.insert(param.key.to_string(), parse_value(param, raw)?);
        }
        Ok(Self {
            experiment: experiment.to_string(),
            params: values,
        })
    }

    /// Parses the file format; `experiment` must be one of the keys.
    pub fn parse(text: &str) -> Result<Self> {
        let (experiment, pairs) = split_lines(text)?;
        let experiment = experiment.ok_or_else(|| Error::Config("missing key `experiment`".into()))?;
        let pairs: Vec<(&str, &str)> = pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        Self::from_pairs(&experiment, &pairs)
    }

    /// Combines an optional file with `key = value` overrides that replace
    /// file entries. The file, if present, must name the same experiment.
    pub fn assemble(experiment: &str, file: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = Vec::new();
        if let Some(text) = file {
            let (named, file_pairs) = split_lines(text)?;
            if let Some(named) = named {
                if named != experiment {
                    return Err(Error::Config(format!(
                        "config is for experiment `{named}`, not `{experiment}`"
                    )));
                }
            }
            pairs = file_pairs;
        }
        for (k, v) in overrides {
            pairs.retain(|(key, _)| key != k);
            pairs.push((k.clone(), v.clone()));
        }
        let pairs: Vec<(&str, &str)> = pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        Self::from_pairs(experiment, &pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Replaces one value after validating it.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let param = schema(&self.experiment)?
            .iter()
            .find(|p| p.key == key)
            .ok_or_else(|| Error::Config(format!("unknown key `{key}` for experiment `{}`", self.experiment)))?;
        self.params.insert(key.to_string(), parse_value(param, raw)?);
        Ok(())
    }

    /// Serializes back to the file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("experiment = {}\n", self.experiment);
        for (key, value) in &self.params {
            let raw = match value {
                Value::Int(v) => v.to_string(),
                Value::Float(v) => format!("{v:?}"),
                Value::Text(s) => s.clone(),
                Value::Ints(v) => v.iter().map(u64::to_string).collect::<Vec<_>>().join(", "),
                Value::Floats(v) => v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "),
                Value::Complexes(v) => v
                    .iter()
                    .map(|[re, im]| format!("{:?}{:+?}i", re, im))
                    .collect::<Vec<_>>()
                    .join(", "),
                Value::Texts(v) => v.join("; "),
            };
            out.push_str(&format!("{key} = {raw}\n"));
        }
        out
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.params
            .get(key)
            .ok_or_else(|| Error::Config(format!("`{}` has no key `{key}`", self.experiment)))
    }

    fn mismatch(&self, key: &str, want: &str) -> Error {
        Error::Config(format!("`{key}` is not {want}"))
    }

    pub fn int(&self, key: &str) -> Result<usize> {
        match self.get(key)? {
            Value::Int(v) => usize::try_from(*v).map_err(|_| self.mismatch(key, "a usize")),
            _ => Err(self.mismatch(key, "an integer")),
        }
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Float(v) => Ok(*v),
            Value::Int(v) => Ok(*v as f64),
            _ => Err(self.mismatch(key, "a number")),
        }
    }

    pub fn text(&self, key: &str) -> Result<&str> {
        match self.get(key)? {
            Value::Text(s) => Ok(s),
            _ => Err(self.mismatch(key, "text")),
        }
    }

    pub fn ints(&self, key: &str) -> Result<Vec<usize>> {
        match self.get(key)? {
            Value::Ints(v) => v
                .iter()
                .map(|x| usize::try_from(*x).map_err(|_| self.mismatch(key, "a usize list")))
                .collect(),
            _ => Err(self.mismatch(key, "an integer list")),
        }
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key)? {
            Value::Floats(v) => Ok(v.clone()),
            _ => Err(self.mismatch(key, "a number list")),
        }
    }

    pub fn complexes(&self, key: &str) -> Result<Vec<C64>> {
        match self.get(key)? {
            Value::Complexes(v) => Ok(v.iter().map(|[re, im]| C64::new(*re, *im)).collect()),
            _ => Err(self.mismatch(key, "a complex list")),
        }
    }

    pub fn texts(&self, key: &str) -> Result<Vec<String>> {
        match self.get(key)? {
            Value::Texts(v) => Ok(v.clone()),
            _ => Err(self.mismatch(key, "a text list")),
        }
    }

    /// The master seed as stream 0.
    pub fn seed(&self) -> Result<Seed> {
        Ok(Seed::new(self.int("seed")? as u64, 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_with_comments_and_defaults() {
        let cfg = RunConfig::parse(
            "# comment\nexperiment = talagrand\n\nn = 6\ntilt = 0.5, -1+2i\npotential = 0.5*tr(x1'*x1) + 0.1*tr(x2'*x2)\nm = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.int("n").unwrap(), 6);
        assert_eq!(cfg.int("samples").unwrap(), 300);
        assert_eq!(cfg.complexes("tilt").unwrap(), vec![C64::new(0.5, 0.0), C64::new(-1.0, 2.0)]);
        assert_eq!(cfg.text("potential").unwrap(), "0.5*tr(x1'*x1) + 0.1*tr(x2'*x2)");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RunConfig::parse("experiment = moment\nwidth = 3"), Err(Error::Config(_))));
        assert!(RunConfig::parse("experiment = moment\nt = -1").is_err());
        assert!(RunConfig::parse("experiment = counterexample\nepsilon = 1.5").is_err());
        assert!(RunConfig::parse("experiment = counterexample\nk = eight").is_err());
        assert!(RunConfig::parse("experiment = nothing").is_err());
        assert!(RunConfig::parse("n = 3").is_err());
        assert!(RunConfig::parse("experiment = eval\nformula = tr(x1)").is_err());
        assert!(RunConfig::parse("experiment = moment\nt = 1\nt = 2").is_err());
    }

    #[test]
    fn text_round_trip() {
        let cfg = RunConfig::from_pairs("qfconv", &[("ns", "4, 8"), ("seed", "9")]).unwrap();
        let again = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);
        let cfg = RunConfig::from_pairs("talagrand", &[("tilt", "0.25-0.5i, 1e-3")]).unwrap();
        assert_eq!(cfg, RunConfig::parse(&cfg.to_text()).unwrap());
    }

    #[test]
    fn overrides_replace_file_entries() {
        let file = "experiment = moment\nt = 2\niterations = 5";
        let cfg = RunConfig::assemble("moment", Some(file), &[("t".into(), "0.5".into())]).unwrap();
        assert_eq!(cfg.float("t").unwrap(), 0.5);
        assert_eq!(cfg.int("iterations").unwrap(), 5);
        assert!(RunConfig::assemble("geodesic", Some(file), &[]).is_err());
        assert!(RunConfig::assemble("eval", None, &[]).is_err());
    }

    #[test]
    fn set_validates() {
        let mut cfg = RunConfig::from_pairs("geodesic", &[]).unwrap();
        cfg.set("seed", "12").unwrap();
        assert_eq!(cfg.seed().unwrap(), Seed::new(12, 0));
        assert!(cfg.set("grid", "0.5, 1.5").is_err());
        assert!(cfg.set("bogus", "1").is_err());
    }
}
