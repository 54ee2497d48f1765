//! Exact Gaussian-rational scalars, the coefficient field ℚ(i).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use num_rational::BigRational;

use super::rat::Rat;

/// An exact element `re + i·im` of ℚ(i).
///
/// Both parts are kept in a canonical reduced form, so structural equality
/// is value equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Scalar {
    re: Rat,
    im: Rat,
}

impl Scalar {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Scalar {
            re: Rat::from_big(re),
            im: Rat::from_big(im),
        }
    }

    pub fn zero() -> Self {
        Scalar::default()
    }

    pub fn one() -> Self {
        Scalar::from_int(1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Scalar {
            re: Rat::zero(),
            im: Rat::one(),
        }
    }

    pub fn from_int(v: i64) -> Self {
        Scalar {
            re: Rat::int(v),
            im: Rat::zero(),
        }
    }

    /// `num/den` as a real scalar. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar {
            re: Rat::from_i128(num as i128, den as i128),
            im: Rat::zero(),
        }
    }

    pub fn from_real(re: BigRational) -> Self {
        Scalar {
            re: Rat::from_big(re),
            im: Rat::zero(),
        }
    }

    pub fn re(&self) -> BigRational {
        self.re.to_big()
    }

    pub fn im(&self) -> BigRational {
        self.im.to_big()
    }

    /// The real part as a real scalar.
    pub fn real_part(&self) -> Scalar {
        Scalar {
            re: self.re.clone(),
            im: Rat::zero(),
        }
    }

    /// The imaginary part as a real scalar.
    pub fn imag_part(&self) -> Scalar {
        Scalar {
            re: self.im.clone(),
            im: Rat::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Scalar {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    fn norm_sqr(&self) -> Rat {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.im.is_zero() {
            return Some(Scalar {
                re: &Rat::one() / &self.re,
                im: Rat::zero(),
            });
        }
        let d = self.norm_sqr();
        Some(Scalar {
            re: &self.re / &d,
            im: -&(&self.im / &d),
        })
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Scalar::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Sign of the real part, falling back to the imaginary part.
    pub fn leading_sign(&self) -> i32 {
        match self.re.signum() {
            0 => self.im.signum(),
            s => s,
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::from_int(v)
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prints in the expression grammar: `3/5`, `4/5*i`, `(3/5+4/5*i)`.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => {
                if self.im.is_one() {
                    write!(f, "i")
                } else if (-&self.im).is_one() {
                    write!(f, "-i")
                } else {
                    write!(f, "{}*i", self.im)
                }
            }
            (false, false) => {
                if self.im.signum() < 0 {
                    write!(f, "({}-{}*i)", self.re, -&self.im)
                } else {
                    write!(f, "({}+{}*i)", self.re, self.im)
                }
            }
        }
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &'a Scalar) -> Scalar {
        Scalar {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &'a Scalar) -> Scalar {
        Scalar {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &'a Scalar) -> Scalar {
        if self.im.is_zero() && rhs.im.is_zero() {
            return Scalar {
                re: &self.re * &rhs.re,
                im: Rat::zero(),
            };
        }
        Scalar {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    /// Panics on division by zero; use [`Scalar::inv`] to handle it.
    fn div(self, rhs: &'a Scalar) -> Scalar {
        let inv = rhs.inv().expect("division of Scalar by zero");
        self * &inv
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -(self.clone())
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        &self + &rhs
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        &self - &rhs
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        self.re = &self.re + &rhs.re;
        self.im = &self.im + &rhs.im;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        self.re = &self.re - &rhs.re;
        self.im = &self.im - &rhs.im;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: &Scalar) {
        *self = &*self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_inverse() {
        let z = &Scalar::ratio(3, 5) + &(&Scalar::ratio(4, 5) * &Scalar::i());
        let w = z.inv().unwrap();
        assert_eq!(&z * &w, Scalar::one());
        // |3/5 + 4/5 i| = 1 so the inverse is the conjugate
        assert_eq!(w, z.conj());
        assert!(Scalar::zero().inv().is_none());
    }

    #[test]
    fn display_forms() {
        assert_eq!(Scalar::ratio(-3, 6).to_string(), "-1/2");
        assert_eq!(Scalar::i().to_string(), "i");
        assert_eq!((-Scalar::i()).to_string(), "-i");
        let z = &Scalar::ratio(1, 2) - &(&Scalar::from_int(3) * &Scalar::i());
        assert_eq!(z.to_string(), "(1/2-3*i)");
    }

    #[test]
    fn pow_matches_repeated_product() {
        let z = &Scalar::from_int(1) + &Scalar::i();
        assert_eq!(z.pow(4), Scalar::from_int(-4));
        assert_eq!(z.pow(0), Scalar::one());
    }

    #[test]
    fn to_complex_of_huge_parts() {
        let big = num_bigint::BigInt::from(10).pow(400);
        let z = Scalar::new(BigRational::new(big.clone() * 3, big.clone()), BigRational::new(big.clone(), -big));
        assert!((z.to_complex() - Complex64::new(3.0, -1.0)).norm() < 1e-12);
    }
}
