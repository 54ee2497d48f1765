//! Multivariate polynomial gcd over ℚ(i).
//!
//! Recursive content/primitive-part decomposition with the subresultant
//! pseudo-remainder sequence in one chosen main variable. Coefficients of
//! the univariate view live in ℚ(i)[other variables], which is again a gcd
//! domain, so the recursion bottoms out at constants.

use std::cell::RefCell;

use super::modular::{certify_coprime, may_divide};
use super::poly::Polynomial;
use super::vars::Var;

/// Most recent nontrivial gcds kept per thread for trial division.
const FACTOR_CACHE: usize = 48;

thread_local! {
    static FACTORS: RefCell<Vec<Polynomial>> = const { RefCell::new(Vec::new()) };
}

fn remember(g: &Polynomial) {
    FACTORS.with(|f| {
        let mut f = f.borrow_mut();
        if f.contains(g) {
            return;
        }
        if f.len() == FACTOR_CACHE {
            f.remove(0);
        }
        f.push(g.clone());
    });
}

/// Divides common cached factors out of both arguments. Returns the
/// product removed and the cofactors.
fn strip_known_factors(a: &Polynomial, b: &Polynomial) -> (Polynomial, Polynomial, Polynomial) {
    let factors = FACTORS.with(|f| f.borrow().clone());
    let mut g = Polynomial::one();
    let (mut a, mut b) = (a.clone(), b.clone());
    for f in factors.iter().rev() {
        loop {
            if !may_divide(f, &a) || !may_divide(f, &b) {
                break;
            }
            let (Some(qa), Some(qb)) = (a.div_exact(f), b.div_exact(f)) else {
                break;
            };
            g = &g * f;
            a = qa;
            b = qb;
        }
    }
    (g, a, b)
}

/// Monic gcd (lex-leading coefficient 1). `gcd(0, 0) = 0`.
pub fn gcd(a: &Polynomial, b: &Polynomial) -> Polynomial {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Polynomial::one();
    }
    if a == b {
        return a.monic();
    }

    // Variables are primes, so the monomial parts split off cleanly.
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mono = ma.gcd(&mb);
    let a = if ma.is_one() { a.clone() } else { a.div_monomial(&ma) };
    let b = if mb.is_one() { b.clone() } else { b.div_monomial(&mb) };
    let rest = gcd_no_monomial(&a, &b);
    rest.mul_monomial(&mono).monic()
}

/// gcd of a list, stopping early once it reaches 1.
pub fn gcd_all<'a, I: IntoIterator<Item = &'a Polynomial>>(items: I) -> Polynomial {
    let mut g = Polynomial::zero();
    for p in items {
        g = gcd(&g, p);
        if g.is_one() {
            break;
        }
    }
    g
}

fn gcd_no_monomial(a: &Polynomial, b: &Polynomial) -> Polynomial {
    if a.is_constant() || b.is_constant() {
        return Polynomial::one();
    }
    if a.len() == 1 || b.len() == 1 {
        // a single term with no monomial content is a constant
        return Polynomial::one();
    }
    let (small, large) = if a.total_degree() <= b.total_degree() {
        (a, b)
    } else {
        (b, a)
    };
    if may_divide(small, large) && large.div_exact(small).is_some() {
        return small.monic();
    }
    if certify_coprime(a, b) {
        return Polynomial::one();
    }
    let (known, ra, rb) = strip_known_factors(a, b);
    if !known.is_one() {
        if ra.is_constant() || rb.is_constant() || certify_coprime(&ra, &rb) {
            return known.monic();
        }
        return (&known * &gcd_no_monomial(&ra, &rb)).monic();
    }
    let g = gcd_by_prs(a, b);
    if !g.is_one() {
        remember(&g);
    }
    g
}

fn gcd_by_prs(a: &Polynomial, b: &Polynomial) -> Polynomial {
    let sa = a.support();
    let sb = b.support();
    // A variable that occurs in only one argument cannot occur in the gcd.
    if let Some(&v) = sa.iter().find(|v| !sb.contains(v)) {
        let c = content_in(a, v);
        return gcd(&c, b);
    }
    if let Some(&v) = sb.iter().find(|v| !sa.contains(v)) {
        let c = content_in(b, v);
        return gcd(a, &c);
    }

    let v = *sa
        .iter()
        .min_by_key(|&&v| (a.degree_in(v).max(b.degree_in(v)), v.index()))
        .expect("nonconstant polynomial has a variable");

    let ca = a.coefficients_in(v);
    let cb = b.coefficients_in(v);
    let cont_a = gcd_all(ca.iter());
    let cont_b = gcd_all(cb.iter());
    let cont = gcd(&cont_a, &cont_b);
    let pa = primitive(&ca, &cont_a);
    let pb = primitive(&cb, &cont_b);

    let g = subresultant_gcd(pa, pb);
    let g_cont = gcd_all(g.iter());
    let g = primitive(&g, &g_cont);
    let out = Polynomial::from_coefficients_in(v, &g);
    (&out * &cont).monic()
}

fn content_in(p: &Polynomial, v: Var) -> Polynomial {
    gcd_all(p.coefficients_in(v).iter())
}

fn primitive(coeffs: &[Polynomial], content: &Polynomial) -> Vec<Polynomial> {
    if content.is_one() {
        return coeffs.to_vec();
    }
    coeffs
        .iter()
        .map(|c| c.div_exact(content).expect("content divides every coefficient"))
        .collect()
}

type Upoly = Vec<Polynomial>;

fn udeg(p: &Upoly) -> usize {
    p.len() - 1
}

fn utrim(p: &mut Upoly) {
    while p.len() > 1 && p.last().is_some_and(Polynomial::is_zero) {
        p.pop();
    }
}

fn uis_zero(p: &Upoly) -> bool {
    p.iter().all(Polynomial::is_zero)
}

/// Pseudo-remainder `lc(b)^(deg a - deg b + 1) · a mod b`.
fn prem(a: &Upoly, b: &Upoly) -> Upoly {
    let db = udeg(b);
    let lc = b[db].clone();
    let mut r = a.clone();
    let mut steps = 0usize;
    let total = udeg(a) + 1 - db;
    while !uis_zero(&r) && udeg(&r) >= db {
        let dr = udeg(&r);
        let lr = r[dr].clone();
        let shift = dr - db;
        for c in r.iter_mut() {
            *c = &*c * &lc;
        }
        for (i, bc) in b.iter().enumerate() {
            let t = &lr * bc;
            r[i + shift] = &r[i + shift] - &t;
        }
        utrim(&mut r);
        steps += 1;
        if r.len() == 1 && r[0].is_zero() {
            break;
        }
    }
    if steps < total {
        let f = lc.pow((total - steps) as u32);
        for c in r.iter_mut() {
            *c = &*c * &f;
        }
    }
    r
}

/// Last nonzero subresultant of two primitive univariate polynomials.
fn subresultant_gcd(a: Upoly, b: Upoly) -> Upoly {
    let (mut a, mut b) = if udeg(&a) >= udeg(&b) { (a, b) } else { (b, a) };
    let mut g = Polynomial::one();
    let mut h = Polynomial::one();
    loop {
        let d = udeg(&a) - udeg(&b);
        let r = prem(&a, &b);
        if uis_zero(&r) {
            return b;
        }
        if udeg(&r) == 0 {
            return vec![Polynomial::one()];
        }
        let divisor = &g * &h.pow(d as u32);
        a = b;
        b = r
            .iter()
            .map(|c| c.div_exact(&divisor).expect("subresultant division is exact"))
            .collect();
        g = a[udeg(&a)].clone();
        h = if d == 0 {
            h
        } else {
            let num = g.pow(d as u32);
            let den = h.pow(d as u32 - 1);
            num.div_exact(&den).expect("subresultant h update is exact")
        };
    }
}

/// Reduces `num/den` by their gcd and makes `den` monic.
pub fn reduce_fraction(num: &Polynomial, den: &Polynomial) -> (Polynomial, Polynomial) {
    if num.is_zero() {
        return (Polynomial::zero(), Polynomial::one());
    }
    let g = gcd(num, den);
    let (n, d) = if g.is_one() {
        (num.clone(), den.clone())
    } else {
        (
            num.div_exact(&g).expect("gcd divides numerator"),
            den.div_exact(&g).expect("gcd divides denominator"),
        )
    };
    let lc = d.lead_coeff();
    if lc.is_one() {
        (n, d)
    } else {
        let inv = lc.inv().expect("nonzero denominator");
        (n.scale(&inv), d.scale(&inv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Scalar;

    fn v(i: usize) -> Polynomial {
        Polynomial::var(Var(i))
    }
    fn c(k: i64) -> Polynomial {
        Polynomial::from_int(k)
    }

    #[test]
    fn univariate_common_factor() {
        let x = v(0);
        let a = &(&x - &c(1)) * &(&x + &c(2));
        let b = &(&x - &c(1)) * &(&x + &c(3));
        assert_eq!(gcd(&a, &b), &x - &c(1));
    }

    #[test]
    fn multivariate_common_factor() {
        let (x, y, t) = (v(0), v(1), v(2));
        let n = &(&(&x * &x) + &(&y * &y)).pow(2) + &(&t * &t);
        let a = &n.pow(2) * &(&x + &t);
        let b = &n * &(&(&y * &t) - &c(5));
        assert_eq!(gcd(&a, &b), n.monic());
        let coprime = gcd(&(&x + &y), &(&x - &y));
        assert!(coprime.is_one());
    }

    #[test]
    fn gaussian_coefficients() {
        let (x, y) = (v(0), v(1));
        let z = &x + &y.scale(&Scalar::i());
        let zbar = &x - &y.scale(&Scalar::i());
        let a = &z * &(&x + &c(1));
        let b = &z * &zbar;
        assert_eq!(gcd(&a, &b), z.monic());
    }

    #[test]
    fn monomial_factors() {
        let (x, y) = (v(0), v(1));
        let a = &(&x * &x) * &(&y + &c(1));
        let b = &(&x * &y) * &(&y + &c(1));
        assert_eq!(gcd(&a, &b), &x * &(&y + &c(1)));
    }

    #[test]
    fn reduce_normalizes_denominator() {
        let (x, y) = (v(0), v(1));
        let num = &(&x * &x) - &(&y * &y);
        let den = (&x - &y).scale(&Scalar::from_int(-2));
        let (n, d) = reduce_fraction(&num, &den);
        assert!(d.is_one());
        assert_eq!(n, (&x + &y).scale(&Scalar::ratio(-1, 2)));
    }
}
