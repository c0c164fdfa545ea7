//! Recursive-descent parser for formulas.
//!
//! ```text
//! formula := sum
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" ["-"] number)?
//! primary := number | atom | quant | func "(" formula ("," formula)* ")" | "(" formula ")"
//! atom    := "re" "tr" "(" poly ")" | "tr" "(" poly ")"
//! quant   := ("sup" | "inf") "{" ident ":" number "}" formula
//! poly    := pterm (("+" | "-") pterm)*
//! pterm   := pfactor ("*" pfactor)*
//! pfactor := "-" pfactor | (number | number "i" | "i" | ident | "(" poly ")") "'"*
//! ```
//!
//! Free variables are `x1, x2, ...`; any other identifier in a polynomial must
//! be bound by an enclosing quantifier. A quantifier body extends as far right
//! as possible.

use crate::error::{Error, Result};
use crate::matcore::C64;

use super::formula::{BinaryOp, Formula, QuantKind, UnaryOp};
use super::poly::{NcPolynomial, Var};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer;

impl Lexer {
    fn run(text: &str) -> Result<Vec<(Tok, usize)>> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|(_, d)| d.is_ascii_digit())) {
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].1.is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let end = chars.get(i).map_or(text.len(), |(p, _)| *p);
                let lit = &text[pos..end];
                let v: f64 = lit.parse().map_err(|_| Error::Syntax {
                    pos,
                    msg: format!("bad number `{lit}`"),
                })?;
                let imag = chars.get(i).is_some_and(|(_, c)| *c == 'i')
                    && !chars
                        .get(i + 1)
                        .is_some_and(|(_, c)| c.is_alphanumeric() || *c == '_');
                if imag {
                    i += 1;
                    out.push((Tok::Imag(v), pos));
                } else {
                    out.push((Tok::Num(v), pos));
                }
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = pos;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let end = chars.get(i).map_or(text.len(), |(p, _)| *p);
                out.push((Tok::Ident(text[start..end].to_string()), start));
                continue;
            }
            if "+-*/^(){}:,'".contains(c) {
                out.push((Tok::Sym(c), pos));
                i += 1;
                continue;
            }
            return Err(Error::Syntax {
                pos,
                msg: format!("unexpected character `{c}`"),
            });
        }
        out.push((Tok::End, text.len()));
        Ok(out)
    }
}

const RESERVED: &[&str] = &[
    "re", "tr", "sup", "inf", "max", "min", "abs", "sqrt", "exp", "log", "i",
];

fn free_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse::<usize>().ok().map(|k| k - 1)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    scope: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn is_sym(&self, c: char) -> bool {
        *self.peek() == Tok::Sym(c)
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.is_sym(c) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name)
    }

    fn number(&mut self) -> Result<f64> {
        let neg = if self.is_sym('-') {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Num(v) => Ok(if neg { -v } else { v }),
            _ => {
                self.at = self.at.saturating_sub(1);
                self.err("expected a number")
            }
        }
    }

    fn sum(&mut self) -> Result<Formula> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.is_sym('+') {
                BinaryOp::Add
            } else if self.is_sym('-') {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Formula::binary(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.is_sym('*') {
                BinaryOp::Mul
            } else if self.is_sym('/') {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.is_sym('-') {
            self.bump();
            return Ok(Formula::unary(UnaryOp::Neg, self.unary()?));
        }
        let base = self.primary()?;
        if self.is_sym('^') {
            self.bump();
            let p = self.number()?;
            return Ok(Formula::Pow(Box::new(base), p));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Formula> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Formula::Const(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let f = self.sum()?;
                self.expect_sym(')')?;
                Ok(f)
            }
            Tok::Ident(name) => match name.as_str() {
                "re" => {
                    self.bump();
                    if !self.is_ident("tr") {
                        return self.err("expected `tr` after `re`");
                    }
                    self.bump();
                    self.expect_sym('(')?;
                    let p = self.poly()?;
                    self.expect_sym(')')?;
                    Ok(Formula::Atom(p))
                }
                "tr" => {
                    self.bump();
                    self.expect_sym('(')?;
                    let p = self.poly()?;
                    self.expect_sym(')')?;
                    if !p.is_self_adjoint(1e-12) {
                        return Err(Error::Syntax {
                            pos,
                            msg: "tr(p) needs a self-adjoint p; use `re tr(...)`".into(),
                        });
                    }
                    Ok(Formula::Atom(p))
                }
                "sup" | "inf" => self.quant(),
                "max" | "min" => {
                    self.bump();
                    self.expect_sym('(')?;
                    let mut acc = self.sum()?;
                    let op = if name == "max" { BinaryOp::Max } else { BinaryOp::Min };
                    let mut count = 1;
                    while self.is_sym(',') {
                        self.bump();
                        let next = self.sum()?;
                        acc = Formula::binary(op, acc, next);
                        count += 1;
                    }
                    if count < 2 {
                        return self.err(format!("`{name}` takes at least two arguments"));
                    }
                    self.expect_sym(')')?;
                    Ok(acc)
                }
                "abs" | "sqrt" | "exp" | "log" => {
                    self.bump();
                    let op = match name.as_str() {
                        "abs" => UnaryOp::Abs,
                        "sqrt" => UnaryOp::Sqrt,
                        "exp" => UnaryOp::Exp,
                        _ => UnaryOp::Log,
                    };
                    self.expect_sym('(')?;
                    let a = self.sum()?;
                    self.expect_sym(')')?;
                    Ok(Formula::unary(op, a))
                }
                _ => self.err(format!(
                    "unexpected identifier `{name}`; matrix variables appear only inside tr(...)"
                )),
            },
            Tok::End => self.err("unexpected end of input"),
            t => self.err(format!("unexpected token {t:?}")),
        }
    }

    fn quant(&mut self) -> Result<Formula> {
        let kind = if self.is_ident("sup") {
            QuantKind::Sup
        } else {
            QuantKind::Inf
        };
        self.bump();
        self.expect_sym('{')?;
        let name_pos = self.pos();
        let name = match self.bump() {
            Tok::Ident(s) => s,
            _ => {
                return Err(Error::Syntax {
                    pos: name_pos,
                    msg: "expected a variable name".into(),
                })
            }
        };
        if RESERVED.contains(&name.as_str()) || free_index(&name).is_some() {
            return Err(Error::Syntax {
                pos: name_pos,
                msg: format!("`{name}` cannot be a quantified variable"),
            });
        }
        if self.scope.contains(&name) {
            return Err(Error::Syntax {
                pos: name_pos,
                msg: format!("`{name}` shadows an enclosing quantified variable"),
            });
        }
        self.expect_sym(':')?;
        let radius_pos = self.pos();
        let radius = self.number()?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "quantifier radius must be positive and finite, got {radius} at position {radius_pos}"
            )));
        }
        self.expect_sym('}')?;
        self.scope.push(name.clone());
        let body = self.sum();
        self.scope.pop();
        Ok(Formula::Quant {
            kind,
            var: name,
            radius,
            body: Box::new(body?),
        })
    }

    fn poly(&mut self) -> Result<NcPolynomial> {
        let mut acc = self.pterm()?;
        loop {
            if self.is_sym('+') {
                self.bump();
                acc = acc.add(&self.pterm()?);
            } else if self.is_sym('-') {
                self.bump();
                acc = acc.sub(&self.pterm()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn pterm(&mut self) -> Result<NcPolynomial> {
        let mut acc = self.pfactor()?;
        while self.is_sym('*') {
            self.bump();
            acc = acc.mul(&self.pfactor()?);
        }
        Ok(acc)
    }

    fn pfactor(&mut self) -> Result<NcPolynomial> {
        if self.is_sym('-') {
            self.bump();
            return Ok(self.pfactor()?.scale(C64::new(-1.0, 0.0)));
        }
        let pos = self.pos();
        let mut base = match self.bump() {
            Tok::Num(v) => NcPolynomial::constant(C64::new(v, 0.0)),
            Tok::Imag(v) => NcPolynomial::constant(C64::new(0.0, v)),
            Tok::Ident(s) if s == "i" => NcPolynomial::constant(C64::new(0.0, 1.0)),
            Tok::Ident(s) => NcPolynomial::var(self.resolve(&s, pos)?),
            Tok::Sym('(') => {
                let p = self.poly()?;
                self.expect_sym(')')?;
                p
            }
            t => {
                return Err(Error::Syntax {
                    pos,
                    msg: format!("unexpected token {t:?} in polynomial"),
                })
            }
        };
        while self.is_sym('\'') {
            self.bump();
            base = base.adjoint();
        }
        Ok(base)
    }

    fn resolve(&self, name: &str, pos: usize) -> Result<Var> {
        if let Some(level) = self.scope.iter().position(|s| s == name) {
            return Ok(Var::Bound(level));
        }
        if let Some(j) = free_index(name) {
            return Ok(Var::Free(j));
        }
        if RESERVED.contains(&name) {
            return Err(Error::Syntax {
                pos,
                msg: format!("`{name}` is not a matrix variable"),
            });
        }
        Err(Error::UnboundVariable(name.to_string()))
    }
}

/// Parses the text form of a formula.
pub fn parse(text: &str) -> Result<Formula> {
    let mut p = Parser {
        toks: Lexer::run(text)?,
        at: 0,
        scope: Vec::new(),
    };
    let f = p.sum()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(f)
}
