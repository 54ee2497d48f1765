//! Rationals with an inline fast path.
//!
//! Almost every coefficient met in practice has a word-sized numerator and
//! denominator. Those stay inline as `i64` pairs and are combined in `i128`
//! arithmetic; anything larger promotes to [`BigRational`]. The
//! representation is canonical (inline whenever the reduced value fits), so
//! derived equality and hashing agree with value equality.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

#[derive(Clone, PartialEq, Eq, Hash)]
pub(crate) enum Rat {
    /// `n/d` in lowest terms, `d > 0`, `n != i64::MIN`.
    Small(i64, i64),
    Big(BigRational),
}

impl Default for Rat {
    fn default() -> Self {
        Rat::Small(0, 1)
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn fits(v: i128) -> bool {
    v > i64::MIN as i128 && v <= i64::MAX as i128
}

impl Rat {
    pub(crate) fn zero() -> Self {
        Rat::Small(0, 1)
    }

    pub(crate) fn one() -> Self {
        Rat::Small(1, 1)
    }

    pub(crate) fn int(v: i64) -> Self {
        Rat::from_i128(v as i128, 1)
    }

    /// `n/d`, reduced. Panics if `d == 0`.
    pub(crate) fn from_i128(n: i128, d: i128) -> Self {
        assert!(d != 0, "zero denominator");
        if n == 0 {
            return Rat::zero();
        }
        let g = gcd_u128(n.unsigned_abs(), d.unsigned_abs()) as i128;
        let (mut n, mut d) = (n / g, d / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        if fits(n) && fits(d) {
            Rat::Small(n as i64, d as i64)
        } else {
            Rat::Big(BigRational::new(BigInt::from(n), BigInt::from(d)))
        }
    }

    pub(crate) fn from_big(r: BigRational) -> Self {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) if n != i64::MIN => Rat::Small(n, d),
            _ => Rat::Big(r),
        }
    }

    pub(crate) fn to_big(&self) -> BigRational {
        match self {
            Rat::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Rat::Big(r) => r.clone(),
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        matches!(self, Rat::Small(0, _))
    }

    pub(crate) fn is_one(&self) -> bool {
        matches!(self, Rat::Small(1, 1))
    }

    pub(crate) fn signum(&self) -> i32 {
        match self {
            Rat::Small(n, _) => n.signum() as i32,
            Rat::Big(r) if r.is_positive() => 1,
            Rat::Big(r) if r.is_negative() => -1,
            Rat::Big(_) => 0,
        }
    }

    pub(crate) fn to_f64(&self) -> f64 {
        match self {
            Rat::Small(n, d) => *n as f64 / *d as f64,
            Rat::Big(r) => big_to_f64(r),
        }
    }

    fn combine(
        &self,
        rhs: &Rat,
        small: impl Fn(i128, i128, i128, i128) -> Option<(i128, i128)>,
        big: impl Fn(&BigRational, &BigRational) -> BigRational,
    ) -> Rat {
        if let (Rat::Small(a, b), Rat::Small(c, d)) = (self, rhs) {
            if let Some((n, den)) = small(*a as i128, *b as i128, *c as i128, *d as i128) {
                return Rat::from_i128(n, den);
            }
        }
        Rat::from_big(big(&self.to_big(), &rhs.to_big()))
    }
}

pub(crate) fn big_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        // huge parts: scale down before dividing
        _ => {
            let bits = r.numer().bits().max(r.denom().bits()) as i64 - 60;
            let shift = bits.max(0) as usize;
            let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
            n / d
        }
    }
}

impl Add for &Rat {
    type Output = Rat;
    fn add(self, rhs: &Rat) -> Rat {
        if let (Rat::Small(a, 1), Rat::Small(c, 1)) = (self, rhs) {
            return Rat::from_i128(*a as i128 + *c as i128, 1);
        }
        self.combine(
            rhs,
            |a, b, c, d| {
                let g = b.gcd(&d);
                let (bg, dg) = (b / g, d / g);
                Some((a.checked_mul(dg)?.checked_add(c.checked_mul(bg)?)?, bg.checked_mul(d)?))
            },
            |x, y| x + y,
        )
    }
}

impl Sub for &Rat {
    type Output = Rat;
    fn sub(self, rhs: &Rat) -> Rat {
        self + &(-rhs)
    }
}

impl Mul for &Rat {
    type Output = Rat;
    fn mul(self, rhs: &Rat) -> Rat {
        self.combine(rhs, |a, b, c, d| Some((a * c, b * d)), |x, y| x * y)
    }
}

impl Div for &Rat {
    type Output = Rat;
    /// Panics on division by zero.
    fn div(self, rhs: &Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        self.combine(rhs, |a, b, c, d| Some((a * d, b * c)), |x, y| x / y)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match self {
            Rat::Small(n, d) => Rat::Small(-n, *d),
            Rat::Big(r) => Rat::from_big(-r.clone()),
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rat::Small(n, 1) => write!(f, "{n}"),
            Rat::Small(n, d) => write!(f, "{n}/{d}"),
            Rat::Big(r) => write!(f, "{r}"),
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let m = Rat::int(i64::MAX);
        let sq = &m * &m;
        assert!(matches!(sq, Rat::Big(_)));
        assert_eq!(&sq / &m, m);
        assert!(matches!(&sq / &m, Rat::Small(..)));
        // i64::MIN is never stored inline, so negation cannot overflow
        let low = &Rat::int(-i64::MAX) - &Rat::one();
        assert!(matches!(low, Rat::Big(_)));
        assert_eq!(-&(-&low), low);
    }

    #[test]
    fn display_matches_bigrational() {
        assert_eq!(Rat::from_i128(-3, 6).to_string(), big(-3, 6).to_string());
        assert_eq!(Rat::int(7).to_string(), "7");
    }

    proptest! {
        #[test]
        fn agrees_with_bigrational(a in any::<i64>(), b in 1..i64::MAX, c in any::<i64>(), d in 1..i64::MAX) {
            let (x, y) = (Rat::from_i128(a as i128, b as i128), Rat::from_i128(c as i128, d as i128));
            let (bx, by) = (big(a, b), big(c, d));
            prop_assert_eq!((&x + &y).to_big(), &bx + &by);
            prop_assert_eq!((&x - &y).to_big(), &bx - &by);
            prop_assert_eq!((&x * &y).to_big(), &bx * &by);
            if c != 0 {
                prop_assert_eq!((&x / &y).to_big(), &bx / &by);
            }
            prop_assert_eq!(Rat::from_big(&bx * &by), &x * &y);
        }
    }
}
