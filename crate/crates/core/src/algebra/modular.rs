//! Modular images used to speed up gcd computations.
//!
//! Reduction sends ℚ(i) to 𝔽_p for a prime `p ≡ 1 (mod 4)`, mapping `i` to a
//! square root of −1. Evaluating every variable but one at fixed residues
//! gives a univariate image. When the leading coefficients survive the
//! evaluation, the degree of the image gcd bounds the degree of the true gcd
//! in that variable, so a trivial image gcd in every shared variable proves
//! coprimality. A failed reduction only ever means "no certificate".

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

use super::poly::Polynomial;
use super::scalar::Scalar;
use super::vars::Var;

/// `(p, √−1 mod p)` pairs.
const FIELDS: [(u64, u64); 2] = [(2147483629, 629208553), (2147483549, 895500278)];

/// Evaluation residues for the non-main variables; any fixed list works,
/// a bad choice only costs a retry.
const POINTS: [[u64; 16]; 2] = [
    [
        1234577, 7654337, 5555527, 9999991, 3141593, 2718283, 1618033, 1414213, 1732051, 2236067, 2645751,
        3316625, 3605551, 4123106, 4358899, 4795832,
    ],
    [
        982451653 % 2147483549,
        57885161,
        43112609,
        37156667,
        32582657,
        30402457,
        25964951,
        24036583,
        20996011,
        13466917,
        6972593,
        3021377,
        2976221,
        1398269,
        1257787,
        859433,
    ],
];

fn big_mod(v: &BigInt, p: u64) -> u64 {
    let r = v.mod_floor(&BigInt::from(p));
    r.to_u64().expect("residue fits")
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn rat_mod(r: &num_rational::BigRational, p: u64) -> Option<u64> {
    let d = big_mod(r.denom(), p);
    if d == 0 {
        return None;
    }
    let n = if r.numer().is_negative() {
        (p - big_mod(&-r.numer(), p)) % p
    } else {
        big_mod(r.numer(), p)
    };
    Some(n * inv_mod(d, p) % p)
}

fn scalar_mod(s: &Scalar, p: u64, i: u64) -> Option<u64> {
    let re = rat_mod(&s.re(), p)?;
    let im = rat_mod(&s.im(), p)?;
    Some((re + im * i % p) % p)
}

/// Image of `f` in 𝔽_p[v] with every other variable `w` set to
/// `point[w]`. Returns coefficients by degree in `v`.
fn univariate_image(f: &Polynomial, v: Var, point: &[u64], p: u64, i: u64) -> Option<Vec<u64>> {
    let deg = f.degree_in(v) as usize;
    let mut out = vec![0u64; deg + 1];
    for (m, c) in f.terms() {
        let mut t = scalar_mod(c, p, i)?;
        for (w, &e) in m.exponents().iter().enumerate() {
            if w != v.index() && e > 0 {
                t = t * pow_mod(point[w % point.len()], e as u64, p) % p;
            }
        }
        let k = m.exponent(v) as usize;
        out[k] = (out[k] + t) % p;
    }
    Some(out)
}

fn trim(a: &mut Vec<u64>) {
    while a.len() > 1 && *a.last().expect("nonempty") == 0 {
        a.pop();
    }
}

/// Degree of the gcd of two univariate polynomials over 𝔽_p.
fn ugcd_degree(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> usize {
    trim(&mut a);
    trim(&mut b);
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.len() == 1 && b[0] == 0 {
            return a.len() - 1;
        }
        if b.len() == 1 {
            return 0;
        }
        // a mod b
        let lb = inv_mod(*b.last().expect("nonempty"), p);
        while a.len() >= b.len() && !(a.len() == 1 && a[0] == 0) {
            let shift = a.len() - b.len();
            let q = a.last().copied().expect("nonempty") * lb % p;
            for (k, &bc) in b.iter().enumerate() {
                let idx = k + shift;
                a[idx] = (a[idx] + p - q * bc % p) % p;
            }
            a.pop();
            if a.is_empty() {
                a.push(0);
            }
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
}

/// Images of `a` and `b` in `v` whose degrees equal the true degrees.
fn faithful_images(a: &Polynomial, b: &Polynomial, v: Var) -> Option<(Vec<u64>, Vec<u64>, u64)> {
    let (da, db) = (a.degree_in(v) as usize, b.degree_in(v) as usize);
    for (k, &(p, i)) in FIELDS.iter().enumerate() {
        let point = &POINTS[k];
        let (Some(ia), Some(ib)) = (univariate_image(a, v, point, p, i), univariate_image(b, v, point, p, i)) else {
            continue;
        };
        if ia[da] != 0 && ib[db] != 0 {
            return Some((ia, ib, p));
        }
    }
    None
}

/// `true` proves `gcd(a, b) = 1`; `false` is inconclusive.
pub(crate) fn certify_coprime(a: &Polynomial, b: &Polynomial) -> bool {
    let sa = a.support();
    let sb = b.support();
    for v in sa.iter().filter(|v| sb.contains(v)) {
        match faithful_images(a, b, *v) {
            Some((ia, ib, p)) => {
                if ugcd_degree(ia, ib, p) > 0 {
                    return false;
                }
            }
            None => return false,
        }
    }
    true
}

/// `false` proves `d` does not divide `f`; `true` is inconclusive.
pub(crate) fn may_divide(d: &Polynomial, f: &Polynomial) -> bool {
    let sd = d.support();
    let sf = f.support();
    if sd.iter().any(|v| !sf.contains(v) || d.degree_in(*v) > f.degree_in(*v)) {
        return false;
    }
    let Some(&v) = sd.first() else {
        return true;
    };
    match faithful_images(d, f, v) {
        Some((id, iff, p)) => {
            // divisibility of images: gcd(d, f) image must have full degree
            ugcd_degree(id.clone(), iff, p) == id.len() - 1
        }
        None => true,
    }
}
