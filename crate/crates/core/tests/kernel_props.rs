//! Randomized identities of the exact kernel.

mod common;

use common::*;
use heis_core::algebra::{RationalFn, Scalar};
use heis_core::diffop::{frame, mirror_frame};
use heis_core::group::{group_inv, group_mul, Point};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn leibniz_rule(f in rational(), g in rational(), var in 0usize..4, field in 1usize..=2) {
        leibniz(&f, &g, var, field)?;
    }

    #[test]
    fn gcd_canonical_form(n in polynomial(), d in nonzero_polynomial(), c in nonzero_polynomial()) {
        gcd_canonical(&n, &d, &c)?;
    }

    #[test]
    fn substitution_commutes_with_evaluation(f in rational(), g in rational(), var in 0usize..4, p in point()) {
        substitute_eval(&f, &g, var, &p)?;
    }

    #[test]
    fn field_axioms(f in rational(), g in rational(), h in rational()) {
        prop_assert_eq!(&(&f * &g) * &h, &f * &(&g * &h));
        prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
        prop_assert_eq!(&(&f - &g) + &g, f.clone());
        if !g.is_zero() {
            prop_assert_eq!((&f * &g).checked_div(&g).unwrap(), f.clone());
        }
        prop_assert_eq!(f.conj().conj(), f.clone());
        prop_assert_eq!(&f.re() + &(&RationalFn::i() * &f.im()), f);
    }

    #[test]
    fn mirrors_commute_with_the_frame(f in rational(), k in 1usize..=2, l in 1usize..=2) {
        let a = frame(1, k).apply(&mirror_frame(1, l).apply(&f));
        let b = mirror_frame(1, l).apply(&frame(1, k).apply(&f));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn group_law_exact(p in prop::collection::vec(real_scalar(), 9)) {
        let pt = |s: &[Scalar]| Point::from_coords(s).unwrap();
        let (a, b, c) = (pt(&p[0..3]), pt(&p[3..6]), pt(&p[6..9]));
        let ab_c = group_mul(&group_mul(&a, &b).unwrap(), &c).unwrap();
        let a_bc = group_mul(&a, &group_mul(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(ab_c, a_bc);
        prop_assert_eq!(group_mul(&a, &group_inv(&a)).unwrap(), Point::origin(1));
    }
}
