//! Random exact-algebra inputs and the kernel identities checked on them,
//! shared by the property tests and the acceptance run.

#![allow(dead_code)]

use heis_core::algebra::{gcd, Monomial, Polynomial, RationalFn, Scalar, Var, VarSet};
use heis_core::diffop::frame;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// `H¹` coordinates plus one formal parameter `c`.
pub fn vars() -> VarSet {
    VarSet::with_params(1, &["c"])
}

/// Every variable of [`vars`], coordinates first.
pub fn all_vars() -> Vec<Var> {
    let vs = vars();
    let mut v: Vec<Var> = (0..vs.coord_count()).map(|i| vs.coord(i)).collect();
    v.push(vs.param("c").expect("declared"));
    v
}

pub fn scalar() -> impl Strategy<Value = Scalar> {
    (-6i64..=6, 1i64..=4, -3i64..=3).prop_map(|(a, b, c)| Scalar::ratio(a, b) + Scalar::from_int(c) * Scalar::i())
}

pub fn real_scalar() -> impl Strategy<Value = Scalar> {
    (-9i64..=9, 1i64..=5).prop_map(|(a, b)| Scalar::ratio(a, b))
}

/// Up to four terms, degree at most 2 in each variable.
pub fn polynomial() -> impl Strategy<Value = Polynomial> {
    let nv = all_vars().len();
    prop::collection::vec((prop::collection::vec(0u16..=2, nv), scalar()), 0..=4)
        .prop_map(|terms| Polynomial::from_terms(terms.into_iter().map(|(e, c)| (Monomial::from_exponents(&e), c))))
}

pub fn nonzero_polynomial() -> impl Strategy<Value = Polynomial> {
    polynomial().prop_filter("nonzero", |p| !p.is_zero())
}

pub fn rational() -> impl Strategy<Value = RationalFn> {
    (polynomial(), nonzero_polynomial()).prop_map(|(n, d)| RationalFn::new(n, d).expect("nonzero denominator"))
}

pub fn point() -> impl Strategy<Value = Vec<Scalar>> {
    prop::collection::vec(real_scalar(), all_vars().len())
}

/// `∂(fg) = f∂g + g∂f` for a coordinate or parameter derivative, and the
/// same for a left-invariant frame field.
pub fn leibniz(f: &RationalFn, g: &RationalFn, var: usize, field: usize) -> Result<(), TestCaseError> {
    let v = all_vars()[var];
    let fg = f * g;
    prop_assert_eq!(fg.partial(v), &(f * &g.partial(v)) + &(g * &f.partial(v)));
    let x = frame(1, field);
    prop_assert_eq!(x.apply(&fg), &(f * &x.apply(g)) + &(g * &x.apply(f)));
    Ok(())
}

/// Cancelling a common factor gives the identical representation, and the
/// canonical form has coprime parts with a monic denominator.
pub fn gcd_canonical(num: &Polynomial, den: &Polynomial, common: &Polynomial) -> Result<(), TestCaseError> {
    let plain = RationalFn::new(num.clone(), den.clone()).expect("nonzero");
    let padded = RationalFn::new(num.clone() * common.clone(), den.clone() * common.clone()).expect("nonzero");
    prop_assert_eq!(&plain, &padded);
    let g = gcd(plain.numer(), plain.denom());
    prop_assert!(g.is_constant() && !g.is_zero(), "gcd {:?}", g);
    prop_assert_eq!(plain.denom(), &plain.denom().monic());
    let scaled = RationalFn::new(num.scale(&Scalar::from_int(3)), den.scale(&Scalar::from_int(3))).expect("nonzero");
    prop_assert_eq!(plain, scaled);
    Ok(())
}

/// `(f ∘ [v ↦ g])(p) = f(p[v ↦ g(p)])` exactly, away from poles.
pub fn substitute_eval(f: &RationalFn, g: &RationalFn, var: usize, p: &[Scalar]) -> Result<(), TestCaseError> {
    let v = all_vars()[var];
    let Ok(gp) = g.eval_exact(p) else {
        return Err(TestCaseError::reject("g has a pole at p"));
    };
    let mut q = p.to_vec();
    q[var] = gp;
    let Ok(direct) = f.eval_exact(&q) else {
        return Err(TestCaseError::reject("f has a pole at the moved point"));
    };
    let composed = f.substitute(&[(v, g.clone())]).expect("substitution");
    prop_assert_eq!(composed.eval_exact(p).expect("no pole when both factors are finite"), direct);
    Ok(())
}
