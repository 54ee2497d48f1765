//! The Heisenberg group `H^n`: points, group law, inverse and the
//! exponential map.
//!
//! Points are generic over the coordinate ring so the same law serves
//! floating points, exact rationals and symbolic (rational-function) points.

use std::fmt::Debug;

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{RationalFn, Scalar, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("dimension mismatch: n = {0} vs n = {1}")]
    DimensionMismatch(usize, usize),
    #[error("coordinate list of length {0} is not 2n+1 for any n >= 1")]
    BadLength(usize),
}

/// Minimal commutative-ring interface needed by the group law.
pub trait Coord: Clone + PartialEq + Debug {
    fn zero() -> Self;
    fn from_i64(v: i64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl Coord for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Coord for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn from_i64(v: i64) -> Self {
        Scalar::from_int(v)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Coord for RationalFn {
    fn zero() -> Self {
        RationalFn::zero()
    }
    fn from_i64(v: i64) -> Self {
        RationalFn::from_int(v)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
}

/// A point `(x, y, t)` of `H^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<S = f64> {
    pub x: Vec<S>,
    pub y: Vec<S>,
    pub t: S,
}

impl<S: Coord> Point<S> {
    pub fn new(x: Vec<S>, y: Vec<S>, t: S) -> Result<Self, GroupError> {
        if x.len() != y.len() {
            return Err(GroupError::DimensionMismatch(x.len(), y.len()));
        }
        Ok(Point { x, y, t })
    }

    pub fn origin(n: usize) -> Self {
        Point {
            x: vec![S::zero(); n],
            y: vec![S::zero(); n],
            t: S::zero(),
        }
    }

    /// From coordinates in the order `x1..xn, y1..yn, t`.
    pub fn from_coords(c: &[S]) -> Result<Self, GroupError> {
        if c.len() < 3 || c.len() % 2 == 0 {
            return Err(GroupError::BadLength(c.len()));
        }
        let n = (c.len() - 1) / 2;
        Ok(Point {
            x: c[..n].to_vec(),
            y: c[n..2 * n].to_vec(),
            t: c[2 * n].clone(),
        })
    }

    pub fn coords(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(2 * self.n() + 1);
        out.extend(self.x.iter().cloned());
        out.extend(self.y.iter().cloned());
        out.push(self.t.clone());
        out
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// `(x, y, t) * (x', y', t') = (x + x', y + y', t + t' - 2 x·y' + 2 x'·y)`.
    pub fn mul(&self, q: &Point<S>) -> Result<Point<S>, GroupError> {
        if self.n() != q.n() {
            return Err(GroupError::DimensionMismatch(self.n(), q.n()));
        }
        let two = S::from_i64(2);
        let mut t = self.t.add(&q.t);
        for j in 0..self.n() {
            let cross = q.x[j].mul(&self.y[j]).sub(&self.x[j].mul(&q.y[j]));
            t = t.add(&two.mul(&cross));
        }
        Ok(Point {
            x: self.x.iter().zip(&q.x).map(|(a, b)| a.add(b)).collect(),
            y: self.y.iter().zip(&q.y).map(|(a, b)| a.add(b)).collect(),
            t,
        })
    }

    /// The inverse is `(-x, -y, -t)`.
    pub fn inv(&self) -> Point<S> {
        Point {
            x: self.x.iter().map(Coord::neg).collect(),
            y: self.y.iter().map(Coord::neg).collect(),
            t: self.t.neg(),
        }
    }
}

/// `p * q`.
pub fn group_mul<S: Coord>(p: &Point<S>, q: &Point<S>) -> Result<Point<S>, GroupError> {
    p.mul(q)
}

/// `p^{-1}`.
pub fn group_inv<S: Coord>(p: &Point<S>) -> Point<S> {
    p.inv()
}

impl Point<RationalFn> {
    /// The generic point whose coordinates are the variables of `vars`.
    pub fn generic(vars: &VarSet) -> Self {
        let n = vars.n();
        Point {
            x: (1..=n).map(|j| RationalFn::var(vars.x(j))).collect(),
            y: (1..=n).map(|j| RationalFn::var(vars.y(j))).collect(),
            t: RationalFn::var(vars.t()),
        }
    }
}

/// An element `Σ a_j X_j + Σ b_j Y_j + c T` of the Lie algebra, written in
/// the basis of left-invariant fields at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct LieVector<S = f64> {
    pub a: Vec<S>,
    pub b: Vec<S>,
    pub c: S,
}

impl<S: Coord> LieVector<S> {
    pub fn zero(n: usize) -> Self {
        LieVector {
            a: vec![S::zero(); n],
            b: vec![S::zero(); n],
            c: S::zero(),
        }
    }

    /// Basis vector `X_j` (1-based).
    pub fn x(n: usize, j: usize) -> Self {
        let mut v = LieVector::zero(n);
        v.a[j - 1] = S::from_i64(1);
        v
    }

    /// Basis vector `Y_j` (1-based).
    pub fn y(n: usize, j: usize) -> Self {
        let mut v = LieVector::zero(n);
        v.b[j - 1] = S::from_i64(1);
        v
    }

    /// Basis vector `T`.
    pub fn t(n: usize) -> Self {
        let mut v = LieVector::zero(n);
        v.c = S::from_i64(1);
        v
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn scaled(&self, s: &S) -> Self {
        LieVector {
            a: self.a.iter().map(|v| v.mul(s)).collect(),
            b: self.b.iter().map(|v| v.mul(s)).collect(),
            c: self.c.mul(s),
        }
    }
}

/// Exponential map. In these coordinates the one-parameter subgroup
/// through `W` is `s ↦ (s a, s b, s c)`, so `exp(W) = (a, b, c)`.
pub fn exp<S: Coord>(w: &LieVector<S>) -> Point<S> {
    Point {
        x: w.a.clone(),
        y: w.b.clone(),
        t: w.c.clone(),
    }
}

/// Standard symplectic form `ω(z, z') = Im Σ z_j conj(z'_j)`.
pub fn symplectic_form(z: &[Complex64], w: &[Complex64]) -> f64 {
    z.iter().zip(w).map(|(a, b)| (a * b.conj()).im).sum()
}

/// Exact symplectic form on Gaussian-rational vectors.
pub fn symplectic_form_exact(z: &[Scalar], w: &[Scalar]) -> Scalar {
    let mut acc = Scalar::zero();
    for (a, b) in z.iter().zip(w) {
        acc += &(a * &b.conj());
    }
    acc.imag_part()
}

/// Group law in complex coordinates: `(z + z', t + t' + 2 ω(z, z'))`.
pub fn complex_mul(
    (z, t): (&[Complex64], f64),
    (w, s): (&[Complex64], f64),
) -> (Vec<Complex64>, f64) {
    let sum = z.iter().zip(w).map(|(a, b)| a + b).collect();
    (sum, t + s + 2.0 * symplectic_form(z, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::from_coords(c).unwrap()
    }

    #[test]
    fn group_law_examples() {
        assert_eq!(group_mul(&p(&[1., 0., 0.]), &p(&[0., 1., 0.])).unwrap(), p(&[1., 1., -2.]));
        let q = p(&[1., 2., 3.]);
        assert_eq!(group_mul(&q, &Point::origin(1)).unwrap(), q);
        assert_eq!(group_mul(&p(&[1., 0., 0.]), &p(&[-1., 0., 0.])).unwrap(), Point::origin(1));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(group_inv(&p(&[1., 2., 3.])), p(&[-1., -2., -3.]));
        assert_eq!(group_inv(&Point::<f64>::origin(1)), Point::origin(1));
        assert_eq!(group_inv(&p(&[1., 0., 1., 0., 5.])), p(&[-1., 0., -1., 0., -5.]));
        let q = p(&[0.5, -2., 1., 3., 7.]);
        assert_eq!(group_mul(&q, &group_inv(&q)).unwrap(), Point::origin(2));
    }

    #[test]
    fn dimension_mismatch() {
        let err = group_mul(&Point::<f64>::origin(1), &Point::origin(2)).unwrap_err();
        assert_eq!(err, GroupError::DimensionMismatch(1, 2));
        assert!(Point::<f64>::from_coords(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn exp_examples() {
        assert_eq!(exp(&LieVector::<f64>::zero(1)), Point::origin(1));
        assert_eq!(exp(&LieVector::<f64>::x(1, 1)), p(&[1., 0., 0.]));
        assert_eq!(exp(&LieVector::<f64>::t(1).scaled(&2.5)), p(&[0., 0., 2.5]));
    }

    #[test]
    fn symplectic_examples() {
        let one = [Complex64::new(1.0, 0.0)];
        let i = [Complex64::new(0.0, 1.0)];
        assert_eq!(symplectic_form(&one, &i), -1.0);
        let z = [Complex64::new(0.3, -1.7)];
        assert_eq!(symplectic_form(&z, &z), 0.0);
    }
}
