//! Continuous-logic formulas on matrix tuples: trace-polynomial atoms,
//! `sup`/`inf` over operator-norm balls and real connectives, plus
//! quantifier-free types.

mod eval;
mod formula;
mod parser;
mod poly;
mod qftype;

pub use eval::{evaluate, optimize_quantifier, value_and_gradient, EvalOptions};
pub use formula::{BinaryOp, Formula, QuantKind, UnaryOp};
pub use parser::parse;
pub use poly::{adjoint_word, eval_word, Letter, NcPolynomial, StackEnv, Var, VarEnv, Word};
pub use qftype::{qf_distance, qf_type, QfType, QfWeights};
