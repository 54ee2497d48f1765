//! Exact computer-algebra kernel over the Gaussian rationals.
//!
//! [`Scalar`] is an element of ℚ(i), [`Polynomial`] a sparse multivariate
//! polynomial, and [`RationalFn`] a quotient of two polynomials kept in a
//! unique canonical form, so equality tests are structural.

mod gcd;
mod modular;
mod parse;
mod poly;
mod rational;
mod rat;
mod scalar;
mod vars;

pub use gcd::{gcd, gcd_all, reduce_fraction};
pub use parse::{parse_expr, parse_rational, Expr, ParseError};
pub use poly::{Monomial, Polynomial};
pub use rational::{CompiledPoly, CompiledRational, RationalFn, DEFAULT_POLE_THRESHOLD};
pub use scalar::Scalar;
pub use vars::{Var, VarSet};

pub(crate) use parse::{eval_name, eval_rational, write_rational};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("substitution produces an identically zero denominator")]
    ZeroDenominator,
    #[error("evaluation too close to the denominator zero set (|den| = {magnitude:e})")]
    NearPole { magnitude: f64 },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("`{0}` is an operator, not a function")]
    NotAFunction(String),
}

impl RationalFn {
    /// Canonical text form in the expression grammar, naming variables
    /// through `vars`. [`parse_rational`] reads it back to an equal value.
    pub fn display<'a>(&'a self, vars: &'a VarSet) -> impl std::fmt::Display + 'a {
        struct D<'a>(&'a RationalFn, &'a VarSet);
        impl std::fmt::Display for D<'_> {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write_rational(f, self.0, self.1)
            }
        }
        D(self, vars)
    }
}
