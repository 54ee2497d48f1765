//! Plain-text expression grammar.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' '-'? integer)?
//! atom    := integer | name | name '(' sum ')' | '(' sum ')' | '[' sum ',' sum ']'
//! ```
//!
//! `i` is the imaginary unit. Names resolve against a [`VarSet`] for
//! expressions; the operator language reuses the same tree with its own
//! atoms (`X1`, `Zbar2`, `L(c)`, ...).

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use super::poly::Polynomial;
use super::rational::RationalFn;
use super::scalar::Scalar;
use super::vars::{Var, VarSet};
use super::AlgebraError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(BigInt),
    Name(String),
    Call(String, Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Bracket(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let v: BigInt = src[start..i].parse().expect("digits");
            out.push((start, Tok::Int(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Name(src[start..i].to_string())));
        } else if "+-*/^()[],".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ParseError {
                pos: i,
                msg: format!("unexpected character `{}`", src[i..].chars().next().unwrap_or('?')),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let neg = self.eat('-');
        let e = match self.peek() {
            Some(Tok::Int(v)) => {
                let v: i32 = match i32::try_from(v.clone()) {
                    Ok(v) if v <= 4096 => v,
                    _ => return self.err("exponent too large"),
                };
                self.pos += 1;
                v
            }
            _ => return self.err("expected an integer exponent"),
        };
        if self.peek() == Some(&Tok::Sym('^')) {
            return self.err("chained exponents need parentheses");
        }
        Ok(Expr::Pow(Box::new(base), if neg { -e } else { e }))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(Expr::Int(v))
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let arg = self.sum()?;
                    self.expect(')')?;
                    Ok(Expr::Call(name, Box::new(arg)))
                } else {
                    Ok(Expr::Name(name))
                }
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Sym('[')) => {
                self.pos += 1;
                let a = self.sum()?;
                self.expect(',')?;
                let b = self.sum()?;
                self.expect(']')?;
                Ok(Expr::Bracket(Box::new(a), Box::new(b)))
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses text into an expression tree.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
    };
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Parses text into a rational function over `vars`.
pub fn parse_rational(src: &str, vars: &VarSet) -> Result<RationalFn, AlgebraError> {
    let e = parse_expr(src)?;
    eval_rational(&e, vars)
}

pub(crate) fn eval_rational(e: &Expr, vars: &VarSet) -> Result<RationalFn, AlgebraError> {
    Ok(match e {
        Expr::Int(v) => RationalFn::constant(Scalar::from_real(BigRational::from_integer(v.clone()))),
        Expr::Name(name) => eval_name(name, vars)?,
        Expr::Call(name, _) => return Err(AlgebraError::NotAFunction(name.clone())),
        Expr::Bracket(..) => return Err(AlgebraError::NotAFunction("[.,.]".into())),
        Expr::Neg(a) => -eval_rational(a, vars)?,
        Expr::Add(a, b) => &eval_rational(a, vars)? + &eval_rational(b, vars)?,
        Expr::Sub(a, b) => &eval_rational(a, vars)? - &eval_rational(b, vars)?,
        Expr::Mul(a, b) => &eval_rational(a, vars)? * &eval_rational(b, vars)?,
        Expr::Div(a, b) => eval_rational(a, vars)?.checked_div(&eval_rational(b, vars)?)?,
        Expr::Pow(a, k) => eval_rational(a, vars)?.pow(*k)?,
    })
}

/// Resolves a bare name: `i` or a variable of `vars`.
pub(crate) fn eval_name(name: &str, vars: &VarSet) -> Result<RationalFn, AlgebraError> {
    if name == "i" {
        return Ok(RationalFn::i());
    }
    Ok(RationalFn::var(vars.lookup(name)?))
}

fn is_negative(c: &Scalar) -> bool {
    c.leading_sign() < 0
}

fn write_monomial(f: &mut fmt::Formatter<'_>, exps: &[u16], vars: &VarSet) -> fmt::Result {
    let mut first = true;
    for (i, &e) in exps.iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !first {
            write!(f, "*")?;
        }
        first = false;
        write!(f, "{}", vars.name(Var(i)))?;
        if e > 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

fn write_term(f: &mut fmt::Formatter<'_>, c: &Scalar, exps: &[u16], vars: &VarSet) -> fmt::Result {
    if exps.is_empty() {
        return write!(f, "{c}");
    }
    if !c.is_one() {
        write!(f, "{c}*")?;
    }
    write_monomial(f, exps, vars)
}

pub(crate) fn write_poly(f: &mut fmt::Formatter<'_>, p: &Polynomial, vars: &VarSet) -> fmt::Result {
    if p.is_zero() {
        return write!(f, "0");
    }
    for (k, (m, c)) in p.terms().rev().enumerate() {
        let neg = is_negative(c);
        let shown = if neg { -c } else { c.clone() };
        match (k, neg) {
            (0, false) => {}
            (0, true) => write!(f, "-")?,
            (_, false) => write!(f, " + ")?,
            (_, true) => write!(f, " - ")?,
        }
        write_term(f, &shown, m.exponents(), vars)?;
    }
    Ok(())
}

pub(crate) fn write_rational(f: &mut fmt::Formatter<'_>, r: &RationalFn, vars: &VarSet) -> fmt::Result {
    if r.is_polynomial() {
        return write_poly(f, r.numer(), vars);
    }
    if r.numer().len() == 1 {
        write_poly(f, r.numer(), vars)?;
    } else {
        write!(f, "(")?;
        write_poly(f, r.numer(), vars)?;
        write!(f, ")")?;
    }
    write!(f, "/(")?;
    write_poly(f, r.denom(), vars)?;
    write!(f, ")")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grammar() {
        let vs = VarSet::with_params(1, &["r"]);
        let f = parse_rational("(x1^2 - y1^2)/(x1 - y1)", &vs).unwrap();
        assert_eq!(f, parse_rational("x1 + y1", &vs).unwrap());
        let g = parse_rational("3/5 + 4/5*i", &vs).unwrap();
        assert_eq!(g.constant_value().unwrap(), &Scalar::ratio(3, 5) + &(&Scalar::ratio(4, 5) * &Scalar::i()));
        let h = parse_rational("r^2*t^-1", &vs).unwrap();
        assert_eq!(h.display(&vs).to_string(), "r^2/(t)");
        assert_eq!(parse_rational("-x1^2", &vs).unwrap(), -parse_rational("x1*x1", &vs).unwrap());
    }

    #[test]
    fn rejects_malformed_input() {
        let vs = VarSet::new(1);
        for bad in ["x1^^", "x1 +", "(x1", "x1 $ 2", "x1^2^3", "x2", "1/0", "X1"] {
            assert!(parse_rational(bad, &vs).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn printing_is_canonical() {
        let vs = VarSet::new(1);
        let f = parse_rational("-(1/2 - 3*i)*x1*t + y1^2 - 7", &vs).unwrap();
        let s = f.display(&vs).to_string();
        assert_eq!(s, "-(1/2-3*i)*x1*t + y1^2 - 7");
        assert_eq!(parse_rational(&s, &vs).unwrap(), f);
    }
}
