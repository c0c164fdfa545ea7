use std::fmt;

use super::poly::{NcPolynomial, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuantKind {
    Sup,
    Inf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Sqrt,
    Exp,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Max,
    Min,
}

/// A continuous-logic formula. Bound variables inside atoms are
/// `Var::Bound(level)` where `level` counts enclosing quantifiers from the root.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Const(f64),
    /// `re tr_n(p)`.
    Atom(NcPolynomial),
    Quant {
        kind: QuantKind,
        var: String,
        radius: f64,
        body: Box<Formula>,
    },
    Unary(UnaryOp, Box<Formula>),
    Binary(BinaryOp, Box<Formula>, Box<Formula>),
    Pow(Box<Formula>, f64),
}

impl Formula {
    pub fn atom(p: NcPolynomial) -> Self {
        Formula::Atom(p)
    }

    pub fn sup(var: &str, radius: f64, body: Formula) -> Self {
        Formula::Quant {
            kind: QuantKind::Sup,
            var: var.to_string(),
            radius,
            body: Box::new(body),
        }
    }

    pub fn inf(var: &str, radius: f64, body: Formula) -> Self {
        Formula::Quant {
            kind: QuantKind::Inf,
            var: var.to_string(),
            radius,
            body: Box::new(body),
        }
    }

    pub fn binary(op: BinaryOp, a: Formula, b: Formula) -> Self {
        Formula::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn unary(op: UnaryOp, a: Formula) -> Self {
        Formula::Unary(op, Box::new(a))
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.quantifier_depth() == 0
    }

    /// Maximal nesting of quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Atom(_) => 0,
            Formula::Quant { body, .. } => 1 + body.quantifier_depth(),
            Formula::Unary(_, a) | Formula::Pow(a, _) => a.quantifier_depth(),
            Formula::Binary(_, a, b) => a.quantifier_depth().max(b.quantifier_depth()),
        }
    }

    /// Number of free variables referenced, i.e. one past the largest index.
    pub fn free_arity(&self) -> usize {
        match self {
            Formula::Const(_) => 0,
            Formula::Atom(p) => p
                .vars()
                .filter_map(|v| match v {
                    Var::Free(j) => Some(j + 1),
                    Var::Bound(_) => None,
                })
                .max()
                .unwrap_or(0),
            Formula::Quant { body, .. } => body.free_arity(),
            Formula::Unary(_, a) | Formula::Pow(a, _) => a.free_arity(),
            Formula::Binary(_, a, b) => a.free_arity().max(b.free_arity()),
        }
    }

    /// Text form accepted by [`parse`](super::parse).
    pub fn to_text(&self) -> String {
        let mut names = Vec::new();
        let mut out = String::new();
        write_expr(self, &mut names, &mut out, Ctx::Top);
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    /// Root, function argument, parenthesized or quantifier body.
    Top,
    /// Right operand of `+` or `-`.
    SumRight,
    /// Operand of `*` or `/` (left).
    Product,
    /// Right operand of `*` or `/`.
    ProductRight,
    /// Operand of unary minus.
    Negated,
    /// Base of `^`.
    PowBase,
}

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
        Formula::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
        Formula::Unary(UnaryOp::Neg, _) => 3,
        Formula::Pow(..) => 4,
        Formula::Quant { .. } => 0,
        _ => 5,
    }
}

fn needs_parens(f: &Formula, ctx: Ctx) -> bool {
    let p = precedence(f);
    match ctx {
        Ctx::Top => false,
        // quantifier bodies are greedy, so any operand position needs parens
        _ if p == 0 => true,
        Ctx::SumRight => p <= 1,
        Ctx::Product => p <= 1,
        Ctx::ProductRight => p <= 2,
        Ctx::Negated => p <= 2,
        Ctx::PowBase => p <= 4,
    }
}

fn fmt_number(v: f64) -> String {
    format!("{v:?}")
}

fn write_expr(f: &Formula, names: &mut Vec<String>, out: &mut String, ctx: Ctx) {
    let paren = needs_parens(f, ctx) || (ctx != Ctx::Top && matches!(f, Formula::Const(v) if *v < 0.0));
    if paren {
        out.push('(');
    }
    match f {
        Formula::Const(v) => out.push_str(&fmt_number(*v)),
        Formula::Atom(p) => {
            out.push_str("re tr(");
            out.push_str(&p.to_text(names));
            out.push(')');
        }
        Formula::Quant {
            kind,
            var,
            radius,
            body,
        } => {
            out.push_str(match kind {
                QuantKind::Sup => "sup{",
                QuantKind::Inf => "inf{",
            });
            out.push_str(var);
            out.push(':');
            out.push_str(&fmt_number(*radius));
            out.push_str("} ");
            names.push(var.clone());
            write_expr(body, names, out, Ctx::Top);
            names.pop();
        }
        Formula::Unary(UnaryOp::Neg, a) => {
            out.push('-');
            write_expr(a, names, out, Ctx::Negated);
        }
        Formula::Unary(op, a) => {
            out.push_str(match op {
                UnaryOp::Abs => "abs(",
                UnaryOp::Sqrt => "sqrt(",
                UnaryOp::Exp => "exp(",
                UnaryOp::Log => "log(",
                UnaryOp::Neg => unreachable!(),
            });
            write_expr(a, names, out, Ctx::Top);
            out.push(')');
        }
        Formula::Binary(op @ (BinaryOp::Max | BinaryOp::Min), a, b) => {
            out.push_str(if *op == BinaryOp::Max { "max(" } else { "min(" });
            write_expr(a, names, out, Ctx::Top);
            out.push_str(", ");
            write_expr(b, names, out, Ctx::Top);
            out.push(')');
        }
        Formula::Binary(op, a, b) => {
            let (sym, lctx, rctx) = match op {
                BinaryOp::Add => (" + ", Ctx::Top, Ctx::SumRight),
                BinaryOp::Sub => (" - ", Ctx::Top, Ctx::SumRight),
                BinaryOp::Mul => (" * ", Ctx::Product, Ctx::ProductRight),
                BinaryOp::Div => (" / ", Ctx::Product, Ctx::ProductRight),
                _ => unreachable!(),
            };
            // the left operand of a sum only needs parens for quantifiers
            let lctx = if lctx == Ctx::Top { Ctx::SumRight } else { lctx };
            if matches!(op, BinaryOp::Add | BinaryOp::Sub) && precedence(a) == 1 {
                write_expr(a, names, out, Ctx::Top);
            } else {
                write_expr(a, names, out, lctx);
            }
            out.push_str(sym);
            write_expr(b, names, out, rctx);
        }
        Formula::Pow(a, p) => {
            write_expr(a, names, out, Ctx::PowBase);
            out.push('^');
            out.push_str(&fmt_number(*p));
        }
    }
    if paren {
        out.push(')');
    }
}
