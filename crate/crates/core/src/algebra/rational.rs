//! Normalized rational functions `num/den` over ℚ(i).

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::gcd::{gcd, reduce_fraction};
use super::poly::{Monomial, Polynomial};
use super::scalar::Scalar;
use super::vars::{Var, VarSet};
use super::AlgebraError;

/// Default magnitude below which a denominator counts as vanishing during
/// floating evaluation.
pub const DEFAULT_POLE_THRESHOLD: f64 = 1e-12;

/// A rational function in canonical form.
///
/// `gcd(num, den) = 1`, `den` is nonzero with lex-leading coefficient 1, and
/// zero is `0/1`. Equal functions therefore have identical representations.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFn {
    num: Polynomial,
    den: Polynomial,
}

impl Default for RationalFn {
    fn default() -> Self {
        RationalFn::zero()
    }
}

impl RationalFn {
    pub fn zero() -> Self {
        RationalFn {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }

    pub fn one() -> Self {
        RationalFn::from_poly(Polynomial::one())
    }

    pub fn constant(c: Scalar) -> Self {
        RationalFn::from_poly(Polynomial::constant(c))
    }

    pub fn from_int(v: i64) -> Self {
        RationalFn::constant(Scalar::from_int(v))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        RationalFn::constant(Scalar::ratio(num, den))
    }

    pub fn i() -> Self {
        RationalFn::constant(Scalar::i())
    }

    pub fn var(v: Var) -> Self {
        RationalFn::from_poly(Polynomial::var(v))
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFn {
            num: p,
            den: Polynomial::one(),
        }
    }

    /// Builds `num/den` and normalizes it.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let (n, d) = reduce_fraction(&num, &den);
        Ok(RationalFn { num: n, den: d })
    }

    pub fn numer(&self) -> &Polynomial {
        &self.num
    }

    pub fn denom(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn constant_value(&self) -> Option<Scalar> {
        if self.den.is_one() {
            self.num.constant_value()
        } else {
            None
        }
    }

    /// True when every coefficient is real.
    pub fn is_real(&self) -> bool {
        self.num.is_real() && self.den.is_real()
    }

    pub fn conj(&self) -> RationalFn {
        // den is monic, so its conjugate is monic and the pair stays reduced
        RationalFn {
            num: self.num.conj(),
            den: self.den.conj(),
        }
    }

    /// Real part, for functions whose variables are all real.
    pub fn re(&self) -> RationalFn {
        let half = RationalFn::ratio(1, 2);
        &half * &(self + &self.conj())
    }

    /// Imaginary part, for functions whose variables are all real.
    pub fn im(&self) -> RationalFn {
        let c = RationalFn::constant(Scalar::ratio(1, 2) * -Scalar::i());
        &c * &(self - &self.conj())
    }

    pub fn scale(&self, c: &Scalar) -> RationalFn {
        if c.is_zero() {
            return RationalFn::zero();
        }
        RationalFn {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn inv(&self) -> Result<RationalFn, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let lc = self.num.lead_coeff().inv().expect("nonzero numerator");
        Ok(RationalFn {
            num: self.den.scale(&lc),
            den: self.num.scale(&lc),
        })
    }

    pub fn checked_div(&self, rhs: &RationalFn) -> Result<RationalFn, AlgebraError> {
        Ok(self * &rhs.inv()?)
    }

    pub fn pow(&self, e: i32) -> Result<RationalFn, AlgebraError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let k = e.unsigned_abs();
        // powers of a reduced fraction stay reduced
        let num = base.num.pow(k);
        let den = base.den.pow(k);
        Ok(RationalFn { num, den })
    }

    /// Exact partial derivative. Any variable index is accepted; callers
    /// that care about the coordinate/parameter split use [`VarSet`].
    pub fn partial(&self, v: Var) -> RationalFn {
        let dp = self.num.partial(v);
        if self.den.is_one() {
            return RationalFn::from_poly(dp);
        }
        let dq = self.den.partial(v);
        if dq.is_zero() {
            // den is constant in v, and p/q reduced means p'/q reduced up to
            // factors of q not involving v
            return normalized(dp, self.den.clone());
        }
        // d(p/q) = (p' q1 - p q'/g) / (q q1) with g = gcd(q, q'), q1 = q/g
        let g = gcd(&self.den, &dq);
        let q1 = self.den.div_exact(&g).expect("gcd divides");
        let dqg = dq.div_exact(&g).expect("gcd divides");
        let num = &(&dp * &q1) - &(&self.num * &dqg);
        let den = &self.den * &q1;
        normalized(num, den)
    }

    /// Partial derivative checked against a variable set.
    pub fn partial_in(&self, vars: &VarSet, v: Var) -> Result<RationalFn, AlgebraError> {
        vars.check(v)?;
        Ok(self.partial(v))
    }

    /// Simultaneous substitution of variables by rational functions.
    pub fn substitute(&self, assignment: &[(Var, RationalFn)]) -> Result<RationalFn, AlgebraError> {
        let width = assignment
            .iter()
            .map(|(v, _)| v.index() + 1)
            .max()
            .unwrap_or(0);
        let mut images: Vec<Option<&RationalFn>> = vec![None; width];
        for (v, f) in assignment {
            images[v.index()] = Some(f);
        }
        Substitution::new(&images).apply(self)
    }

    /// Exact evaluation at a point (one scalar per variable slot).
    pub fn eval_exact(&self, point: &[Scalar]) -> Result<Scalar, AlgebraError> {
        let d = self.den.eval_exact(point);
        if d.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(&self.num.eval_exact(point) / &d)
    }

    /// Floating evaluation; fails if `|den| <= threshold` at the point.
    pub fn eval(&self, point: &[Complex64], threshold: f64) -> Result<Complex64, AlgebraError> {
        self.compile().eval(point, threshold)
    }

    /// Floating evaluation at a real point with the default pole threshold.
    pub fn eval_real(&self, point: &[f64]) -> Result<f64, AlgebraError> {
        self.compile().eval_real(point, DEFAULT_POLE_THRESHOLD)
    }

    pub fn compile(&self) -> CompiledRational {
        CompiledRational {
            num: CompiledPoly::new(&self.num),
            den: CompiledPoly::new(&self.den),
        }
    }

    /// Total degree of numerator and denominator.
    pub fn degrees(&self) -> (u32, u32) {
        (self.num.total_degree(), self.den.total_degree())
    }
}

fn normalized(num: Polynomial, den: Polynomial) -> RationalFn {
    let (n, d) = reduce_fraction(&num, &den);
    RationalFn { num: n, den: d }
}

/// Divides `p` by `f` as many times as possible; returns the count.
fn strip_factor(p: &mut Polynomial, f: &Polynomial) -> u32 {
    if f.is_constant() || p.is_zero() {
        return 0;
    }
    let mut k = 0;
    while let Some(q) = p.div_exact(f) {
        *p = q;
        k += 1;
    }
    k
}

/// A prepared substitution. Denominators of the images are grouped so that a
/// polynomial is mapped to `N / Π D_k^{E_k}` with one common denominator,
/// and those `D_k` are tried as cancellation hints before the final gcd.
pub(crate) struct Substitution<'a> {
    images: Vec<Option<(&'a Polynomial, usize)>>,
    dens: Vec<Polynomial>,
}

impl<'a> Substitution<'a> {
    pub(crate) fn new(images: &[Option<&'a RationalFn>]) -> Self {
        let mut dens: Vec<Polynomial> = Vec::new();
        let mut out = Vec::with_capacity(images.len());
        for img in images {
            out.push(img.map(|f| {
                let k = match dens.iter().position(|d| d == &f.den) {
                    Some(k) => k,
                    None => {
                        dens.push(f.den.clone());
                        dens.len() - 1
                    }
                };
                (&f.num, k)
            }));
        }
        Substitution { images: out, dens }
    }

    /// Returns `(N, E)` with `p(images) = N / Π dens[k]^E[k]`.
    fn map_poly(&self, p: &Polynomial) -> (Polynomial, Vec<u32>) {
        let nd = self.dens.len();
        let mut spent: Vec<(Vec<u32>, Polynomial)> = Vec::with_capacity(p.len());
        let mut max_e = vec![0u32; nd];
        let mut cache: std::collections::HashMap<(usize, u16), Polynomial> = Default::default();
        for (m, c) in p.terms() {
            let mut term = Polynomial::constant(c.clone());
            let mut kept = Monomial::one();
            let mut s = vec![0u32; nd];
            for (i, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                match self.images.get(i).copied().flatten() {
                    Some((num, k)) => {
                        let pw = cache.entry((i, e)).or_insert_with(|| num.pow(e as u32));
                        term = &term * pw;
                        s[k] += e as u32;
                    }
                    None => kept.set(Var(i), e),
                }
            }
            for k in 0..nd {
                max_e[k] = max_e[k].max(s[k]);
            }
            spent.push((s, term.mul_monomial(&kept)));
        }
        let mut total = Polynomial::zero();
        let mut den_pows: std::collections::HashMap<(usize, u32), Polynomial> = Default::default();
        for (s, term) in spent {
            let mut t = term;
            for k in 0..nd {
                let missing = max_e[k] - s[k];
                if missing > 0 && !self.dens[k].is_one() {
                    let pw = den_pows
                        .entry((k, missing))
                        .or_insert_with(|| self.dens[k].pow(missing));
                    t = &t * pw;
                }
            }
            total = &total + &t;
        }
        (total, max_e)
    }

    pub(crate) fn apply(&self, f: &RationalFn) -> Result<RationalFn, AlgebraError> {
        let (mut num, ep) = self.map_poly(&f.num);
        let (mut den, eq) = if f.den.is_one() {
            (Polynomial::one(), vec![0; self.dens.len()])
        } else {
            self.map_poly(&f.den)
        };
        if den.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(RationalFn::zero());
        }
        // f = num * Π D^eq / (den * Π D^ep)
        let mut exps: Vec<i64> = ep.iter().zip(&eq).map(|(a, b)| *b as i64 - *a as i64).collect();
        for (k, d) in self.dens.iter().enumerate() {
            if d.is_one() {
                continue;
            }
            if exps[k] < 0 {
                // try to cancel against the numerator before expanding
                let mut avail = -exps[k];
                while avail > 0 {
                    match num.div_exact(d) {
                        Some(q) => {
                            num = q;
                            avail -= 1;
                        }
                        None => break,
                    }
                }
                exps[k] = -avail;
            } else if exps[k] > 0 {
                let mut avail = exps[k];
                while avail > 0 {
                    match den.div_exact(d) {
                        Some(q) => {
                            den = q;
                            avail -= 1;
                        }
                        None => break,
                    }
                }
                exps[k] = avail;
            }
        }
        for (k, d) in self.dens.iter().enumerate() {
            if exps[k] > 0 {
                num = &num * &d.pow(exps[k] as u32);
            } else if exps[k] < 0 {
                den = &den * &d.pow((-exps[k]) as u32);
            }
        }
        // leftover hint factors shared by both sides
        for d in &self.dens {
            if d.is_constant() {
                continue;
            }
            let mut trial_n = num.clone();
            let mut trial_d = den.clone();
            let a = strip_factor(&mut trial_n, d);
            let b = strip_factor(&mut trial_d, d);
            let common = a.min(b);
            if common > 0 {
                let dp = d.pow(common);
                num = num.div_exact(&dp).expect("stripped");
                den = den.div_exact(&dp).expect("stripped");
            }
        }
        Ok(normalized(num, den))
    }
}

impl<'a> Add<&'a RationalFn> for &'a RationalFn {
    type Output = RationalFn;
    fn add(self, rhs: &'a RationalFn) -> RationalFn {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RationalFn::from_poly(&self.num + &rhs.num);
        }
        if self.den == rhs.den {
            let num = &self.num + &rhs.num;
            return normalized(num, self.den.clone());
        }
        if self.den.is_one() {
            let num = &(&self.num * &rhs.den) + &rhs.num;
            // gcd(a*d + c, d) = gcd(c, d) = 1
            return RationalFn {
                num,
                den: rhs.den.clone(),
            };
        }
        if rhs.den.is_one() {
            let num = &self.num + &(&rhs.num * &self.den);
            return RationalFn {
                num,
                den: self.den.clone(),
            };
        }
        // Henrici: with g = gcd(b, d), a/b + c/d = (a d' + c b') / (b' d' g)
        let g = gcd(&self.den, &rhs.den);
        if g.is_one() {
            let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
            // coprime denominators keep the sum reduced
            let den = &self.den * &rhs.den;
            return monic_pair(num, den);
        }
        let b1 = self.den.div_exact(&g).expect("gcd divides");
        let d1 = rhs.den.div_exact(&g).expect("gcd divides");
        let num = &(&self.num * &d1) + &(&rhs.num * &b1);
        let den = &(&b1 * &d1) * &g;
        normalized(num, den)
    }
}

fn monic_pair(num: Polynomial, den: Polynomial) -> RationalFn {
    if num.is_zero() {
        return RationalFn::zero();
    }
    let lc = den.lead_coeff();
    if lc.is_one() {
        RationalFn { num, den }
    } else {
        let inv = lc.inv().expect("nonzero");
        RationalFn {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }
}

impl<'a> Sub<&'a RationalFn> for &'a RationalFn {
    type Output = RationalFn;
    fn sub(self, rhs: &'a RationalFn) -> RationalFn {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a RationalFn> for &'a RationalFn {
    type Output = RationalFn;
    fn mul(self, rhs: &'a RationalFn) -> RationalFn {
        if self.is_zero() || rhs.is_zero() {
            return RationalFn::zero();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RationalFn::from_poly(&self.num * &rhs.num);
        }
        if let Some(c) = self.constant_value() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.constant_value() {
            return self.scale(&c);
        }
        // cross-cancel: (a/b)(c/d) with g1 = gcd(a, d), g2 = gcd(c, b)
        let g1 = if rhs.den.is_one() {
            Polynomial::one()
        } else {
            gcd(&self.num, &rhs.den)
        };
        let g2 = if self.den.is_one() {
            Polynomial::one()
        } else {
            gcd(&rhs.num, &self.den)
        };
        let a = self.num.div_exact(&g1).expect("gcd divides");
        let d = rhs.den.div_exact(&g1).expect("gcd divides");
        let c = rhs.num.div_exact(&g2).expect("gcd divides");
        let b = self.den.div_exact(&g2).expect("gcd divides");
        monic_pair(&a * &c, &b * &d)
    }
}

impl Neg for &RationalFn {
    type Output = RationalFn;
    fn neg(self) -> RationalFn {
        RationalFn {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Neg for RationalFn {
    type Output = RationalFn;
    fn neg(self) -> RationalFn {
        -&self
    }
}

impl Add for RationalFn {
    type Output = RationalFn;
    fn add(self, rhs: RationalFn) -> RationalFn {
        &self + &rhs
    }
}

impl Sub for RationalFn {
    type Output = RationalFn;
    fn sub(self, rhs: RationalFn) -> RationalFn {
        &self - &rhs
    }
}

impl Mul for RationalFn {
    type Output = RationalFn;
    fn mul(self, rhs: RationalFn) -> RationalFn {
        &self * &rhs
    }
}

impl From<Polynomial> for RationalFn {
    fn from(p: Polynomial) -> Self {
        RationalFn::from_poly(p)
    }
}

impl From<Scalar> for RationalFn {
    fn from(c: Scalar) -> Self {
        RationalFn::constant(c)
    }
}

impl std::fmt::Debug for RationalFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:?}) / ({:?})", self.num, self.den)
    }
}

/// Polynomial with `f64` coefficients, for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(Vec<(usize, u16)>, Complex64)>,
    real: bool,
}

impl CompiledPoly {
    pub fn new(p: &Polynomial) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let factors = m
                    .exponents()
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| (i, e))
                    .collect();
                (factors, c.to_complex())
            })
            .collect();
        CompiledPoly {
            terms,
            real: p.is_real(),
        }
    }

    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (factors, c) in &self.terms {
            let mut t = *c;
            for &(i, e) in factors {
                let x = point.get(i).copied().unwrap_or_default();
                t *= x.powi(e as i32);
            }
            acc += t;
        }
        acc
    }

    pub fn eval_real(&self, point: &[f64]) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (factors, c) in &self.terms {
            let mut t = 1.0;
            for &(i, e) in factors {
                let x = point.get(i).copied().unwrap_or_default();
                t *= x.powi(e as i32);
            }
            re += c.re * t;
            if !self.real {
                im += c.im * t;
            }
        }
        Complex64::new(re, im)
    }
}

/// A rational function prepared for floating evaluation.
#[derive(Clone, Debug)]
pub struct CompiledRational {
    num: CompiledPoly,
    den: CompiledPoly,
}

impl CompiledRational {
    pub fn eval(&self, point: &[Complex64], threshold: f64) -> Result<Complex64, AlgebraError> {
        let d = self.den.eval(point);
        if d.norm() <= threshold {
            return Err(AlgebraError::NearPole { magnitude: d.norm() });
        }
        Ok(self.num.eval(point) / d)
    }

    /// Real part of the value at a real point.
    pub fn eval_real(&self, point: &[f64], threshold: f64) -> Result<f64, AlgebraError> {
        let d = self.den.eval_real(point);
        if d.norm() <= threshold {
            return Err(AlgebraError::NearPole { magnitude: d.norm() });
        }
        Ok((self.num.eval_real(point) / d).re)
    }

    pub fn eval_complex_at_real(&self, point: &[f64], threshold: f64) -> Result<Complex64, AlgebraError> {
        let d = self.den.eval_real(point);
        if d.norm() <= threshold {
            return Err(AlgebraError::NearPole { magnitude: d.norm() });
        }
        Ok(self.num.eval_real(point) / d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> RationalFn {
        RationalFn::var(Var(i))
    }

    #[test]
    fn difference_of_squares() {
        let (x, t) = (v(0), v(2));
        let p = &(&x + &t) * &(&x - &t);
        assert_eq!(p, &(&x * &x) - &(&t * &t));
    }

    #[test]
    fn gcd_cancellation() {
        let (x, y) = (v(0), v(1));
        let q = (&(&x * &x) - &(&y * &y)).checked_div(&(&x - &y)).unwrap();
        assert_eq!(q, &x + &y);
        assert!(q.is_polynomial());
    }

    #[test]
    fn additive_inverse_of_reciprocals() {
        let x = v(0);
        let a = x.inv().unwrap();
        let b = (-&x).inv().unwrap();
        assert!((&a + &b).is_zero());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let x = v(0);
        assert_eq!(x.checked_div(&RationalFn::zero()), Err(AlgebraError::DivisionByZero));
        assert!(RationalFn::new(Polynomial::one(), Polynomial::zero()).is_err());
    }

    #[test]
    fn quotient_rule() {
        let t = v(2);
        let inv_t = t.inv().unwrap();
        let expect = -&(&t * &t).inv().unwrap();
        assert_eq!(inv_t.partial(Var(2)), expect);
        // x^2 y -> 2 x y
        let f = &(&v(0) * &v(0)) * &v(1);
        assert_eq!(f.partial(Var(0)), &RationalFn::from_int(2) * &(&v(0) * &v(1)));
    }

    #[test]
    fn derivative_of_power_denominator() {
        let (x, t) = (v(0), v(2));
        let n = &(&x * &x) + &(&t * &t);
        let f = n.pow(-3).unwrap();
        let expect = &RationalFn::from_int(-6) * &(&x * &n.pow(-4).unwrap());
        assert_eq!(f.partial(Var(0)), expect);
    }

    #[test]
    fn substitution_examples() {
        let (x, t) = (v(0), v(2));
        let f = &x + &t;
        let g = f
            .substitute(&[(Var(0), &RationalFn::from_int(2) * &x), (Var(2), &RationalFn::from_int(4) * &t)])
            .unwrap();
        assert_eq!(g, &(&RationalFn::from_int(2) * &x) + &(&RationalFn::from_int(4) * &t));
        let h = t.inv().unwrap().substitute(&[(Var(2), &t * &t)]).unwrap();
        assert_eq!(h, (&t * &t).inv().unwrap());
        let xy = &v(0) * &v(1);
        let s = xy.substitute(&[(Var(0), -v(1)), (Var(1), v(0))]).unwrap();
        assert_eq!(s, -xy);
    }

    #[test]
    fn substitution_onto_pole_is_an_error() {
        let t = v(2);
        let f = t.inv().unwrap();
        assert_eq!(
            f.substitute(&[(Var(2), RationalFn::zero())]),
            Err(AlgebraError::ZeroDenominator)
        );
    }

    #[test]
    fn evaluation() {
        let x = v(0);
        assert_eq!((&x * &x).eval_real(&[3.0]).unwrap(), 9.0);
        let t = v(2);
        assert_eq!(t.inv().unwrap().eval_real(&[0.0, 0.0, 2.0]).unwrap(), 0.5);
        let y = v(1);
        let q = (&(&x * &x) - &(&y * &y)).checked_div(&(&x - &y)).unwrap();
        assert_eq!(q.eval_real(&[1.0, 1.0]).unwrap(), 2.0);
        assert!(matches!(
            t.inv().unwrap().eval_real(&[0.0, 0.0, 1e-13]),
            Err(AlgebraError::NearPole { .. })
        ));
    }
}
