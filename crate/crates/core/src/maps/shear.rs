//! Solving the contact equations for the vertical component.
//!
//! Given a polynomial horizontal part `(f₁, …, f_{2n})`, the contact system
//! prescribes `X_k f_{2n+1} = R_k`. The bracket `[X₁, Y₁] = −4T` then fixes
//! `T f_{2n+1}`, so the full coordinate gradient is known and `f_{2n+1}` is
//! recovered by integrating along rays from the origin.

use crate::algebra::{Monomial, Polynomial, RationalFn, Scalar, Var, VarSet};
use crate::diffop::frame;

use super::{ContactMap, MapError};

/// Right-hand sides `R_k = −2 Σ_j (f_j X_k f_{n+j} − f_{n+j} X_k f_j)`.
fn contact_rhs(n: usize, horizontal: &[RationalFn]) -> Vec<RationalFn> {
    (1..=2 * n)
        .map(|k| {
            let xk = frame(n, k);
            let mut acc = RationalFn::zero();
            for j in 0..n {
                let a = &horizontal[j] * &xk.apply(&horizontal[n + j]);
                let b = &horizontal[n + j] * &xk.apply(&horizontal[j]);
                acc = &acc + &(&a - &b);
            }
            acc.scale(&Scalar::from_int(-2))
        })
        .collect()
}

/// `∫₀¹ Σ_v G_v(s p) p_v ds` for polynomial `G`.
fn radial_integral(gradient: &[Polynomial]) -> Polynomial {
    let mut out = Polynomial::zero();
    for (v, g) in gradient.iter().enumerate() {
        for (m, c) in g.terms() {
            let shifted = m.mul(&Monomial::var(Var(v), 1));
            let w = Scalar::ratio(1, m.total_degree() as i64 + 1);
            out.add_term(shifted, &(c * &w));
        }
    }
    out
}

/// The vertical component vanishing at the origin that makes
/// `(horizontal, f_{2n+1})` contact, if one exists.
pub fn solve_vertical_component(vars: &VarSet, horizontal: &[RationalFn]) -> Result<RationalFn, MapError> {
    let n = vars.n();
    if horizontal.len() != 2 * n {
        return Err(MapError::ComponentCount {
            n,
            expected: 2 * n,
            got: horizontal.len(),
        });
    }
    if horizontal.iter().any(|h| !h.is_polynomial()) {
        return Err(MapError::NotSolvable("horizontal part must be polynomial".into()));
    }
    let r = contact_rhs(n, horizontal);
    let tf = (&frame(n, 1).apply(&r[n]) - &frame(n, n + 1).apply(&r[0])).scale(&Scalar::ratio(-1, 4));
    let mut grad = Vec::with_capacity(2 * n + 1);
    for j in 1..=n {
        let y = RationalFn::var(vars.y(j));
        grad.push(&r[j - 1] - &(&y * &tf).scale(&Scalar::from_int(2)));
    }
    for j in 1..=n {
        let x = RationalFn::var(vars.x(j));
        grad.push(&r[n + j - 1] + &(&x * &tf).scale(&Scalar::from_int(2)));
    }
    grad.push(tf);
    let polys: Vec<Polynomial> = grad.iter().map(|g| g.numer().clone()).collect();
    let f = RationalFn::from_poly(radial_integral(&polys));
    // the gradient field is exact only when the data is integrable
    for (i, g) in grad.iter().enumerate() {
        if &f.partial(Var(i)) != g {
            return Err(MapError::NotSolvable(format!(
                "prescribed derivative along {} is not integrable",
                vars.name(Var(i))
            )));
        }
    }
    Ok(f)
}

/// Contact but not conformal: horizontal part `(x_j, y_j + x_j)` with the
/// vertical component solved from the contact equations.
pub fn shear_fixture(n: usize) -> Result<ContactMap, MapError> {
    let vars = VarSet::new(n);
    let mut horizontal: Vec<RationalFn> = (1..=n).map(|j| RationalFn::var(vars.x(j))).collect();
    for j in 1..=n {
        horizontal.push(&RationalFn::var(vars.y(j)) + &RationalFn::var(vars.x(j)));
    }
    let vertical = solve_vertical_component(&vars, &horizontal)?;
    horizontal.push(vertical);
    ContactMap::new("shear", &vars, horizontal)
}

#[cfg(test)]
mod tests {
    use super::super::{is_conformal, is_contact, PositivityGrid};
    use super::*;
    use crate::algebra::parse_rational;

    #[test]
    fn quadratic_shear_solution() {
        let vs = VarSet::new(1);
        let h = vec![parse_rational("x1", &vs).unwrap(), parse_rational("y1 + x1^2", &vs).unwrap()];
        let f = solve_vertical_component(&vs, &h).unwrap();
        assert_eq!(f, parse_rational("t - 2/3*x1^3", &vs).unwrap());
    }

    #[test]
    fn shear_is_contact_not_conformal() {
        for n in 1..=2 {
            let s = shear_fixture(n).unwrap();
            assert!(is_contact(&s).passed());
            let rep = is_conformal(&s, &PositivityGrid::default());
            assert!(!rep.passed());
            assert!(rep.failures().all(|r| r.id().starts_with("MtM")));
        }
    }

    #[test]
    fn non_integrable_data_is_rejected() {
        // (x1^2, y1) has no contact completion: the mixed partials disagree
        let vs = VarSet::new(1);
        let h = vec![parse_rational("x1^2", &vs).unwrap(), parse_rational("y1", &vs).unwrap()];
        let res = solve_vertical_component(&vs, &h);
        assert!(matches!(res, Err(MapError::NotSolvable(_))), "{res:?}");
    }

    #[test]
    fn dilation_horizontal_recovers_vertical() {
        let vs = VarSet::new(2);
        let h: Vec<_> = ["2*x1", "2*x2", "2*y1", "2*y2"]
            .iter()
            .map(|s| parse_rational(s, &vs).unwrap())
            .collect();
        assert_eq!(solve_vertical_component(&vs, &h).unwrap(), parse_rational("4*t", &vs).unwrap());
    }
}
