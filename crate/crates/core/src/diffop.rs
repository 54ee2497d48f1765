//! Differential operators with rational-function coefficients.
//!
//! An operator is kept as `Σ a_α ∂^α` with every coefficient on the left of
//! every derivative. Composition pushes coefficients left with the Leibniz
//! rule, so two operators are equal exactly when their term maps agree.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::algebra::{parse_expr, AlgebraError, Expr, Monomial, RationalFn, Scalar, Var, VarSet};
use crate::group::LieVector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffOpError {
    #[error("index {index} out of range for `{name}` with n = {n}")]
    IndexOutOfRange { name: String, index: usize, n: usize },
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("division by an operator that is not a multiplication operator")]
    NotZeroOrder,
    #[error("negative powers of operators are not defined")]
    NegativePower,
    #[error("operators over different dimensions (n = {0} vs n = {1})")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Named operators of the Heisenberg calculus. Indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    /// `X_j = ∂x_j + 2 y_j ∂t`
    X(usize),
    /// `Y_j = ∂y_j - 2 x_j ∂t`
    Y(usize),
    /// `T = ∂t`
    T,
    /// Right-invariant mirror `X̃_j = X_j - 4 y_j T`
    Xtilde(usize),
    /// Right-invariant mirror `Ỹ_j = Y_j + 4 x_j T`
    Ytilde(usize),
    /// `Z_j = (X_j - i Y_j) / 2`
    Z(usize),
    /// `Z̄_j = (X_j + i Y_j) / 2`
    Zbar(usize),
    /// Kohn Laplacian `Σ X_j² + Y_j²`
    Delta0,
    /// `L_c = -Δ₀/4 + c T`
    L(RationalFn),
}

/// A linear differential operator on functions of `(x, y, t) ∈ H^n`.
#[derive(Clone, PartialEq, Eq)]
pub struct DiffOp {
    n: usize,
    terms: BTreeMap<Monomial, RationalFn>,
}

impl DiffOp {
    pub fn zero(n: usize) -> Self {
        DiffOp {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        DiffOp::multiply_by(n, RationalFn::one())
    }

    /// The zero-order operator `u ↦ f u`.
    pub fn multiply_by(n: usize, f: RationalFn) -> Self {
        let mut op = DiffOp::zero(n);
        op.add_term(Monomial::one(), f);
        op
    }

    /// `∂/∂v` for a coordinate `v`.
    pub fn partial(n: usize, v: Var) -> Self {
        assert!(v.index() < 2 * n + 1, "partial derivative along a non-coordinate");
        let mut op = DiffOp::zero(n);
        op.add_term(Monomial::var(v, 1), RationalFn::one());
        op
    }

    /// First-order operator `Σ_i c_i ∂_i` from coordinate components.
    pub fn vector_field(n: usize, components: &[RationalFn]) -> Self {
        assert_eq!(components.len(), 2 * n + 1);
        let mut op = DiffOp::zero(n);
        for (i, c) in components.iter().enumerate() {
            op.add_term(Monomial::var(Var(i), 1), c.clone());
        }
        op
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn add_term(&mut self, d: Monomial, c: RationalFn) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(d) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = &*e.get() + &c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(multi-index, coefficient)` pairs in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &RationalFn)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, d: &Monomial) -> RationalFn {
        self.terms.get(d).cloned().unwrap_or_default()
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(Monomial::total_degree).max().unwrap_or(0)
    }

    /// The coefficient when `self` is a multiplication operator.
    pub fn as_function(&self) -> Option<RationalFn> {
        if self.terms.keys().all(Monomial::is_one) {
            Some(self.coefficient(&Monomial::one()))
        } else {
            None
        }
    }

    pub fn add(&self, rhs: &DiffOp) -> DiffOp {
        self.check_dim(rhs);
        let mut out = self.clone();
        for (d, c) in &rhs.terms {
            out.add_term(d.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &DiffOp) -> DiffOp {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> DiffOp {
        self.scale(&Scalar::from_int(-1))
    }

    pub fn scale(&self, c: &Scalar) -> DiffOp {
        DiffOp {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(d, a)| (d.clone(), a.scale(c)))
                .filter(|(_, a)| !a.is_zero())
                .collect(),
        }
    }

    /// Left multiplication by a function: `f · A`.
    pub fn left_mul(&self, f: &RationalFn) -> DiffOp {
        DiffOp {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(d, a)| (d.clone(), f * a))
                .filter(|(_, a)| !a.is_zero())
                .collect(),
        }
    }

    /// Complex conjugate (conjugates every coefficient; coordinates are real).
    pub fn conj(&self) -> DiffOp {
        DiffOp {
            n: self.n,
            terms: self.terms.iter().map(|(d, a)| (d.clone(), a.conj())).collect(),
        }
    }

    fn check_dim(&self, rhs: &DiffOp) {
        assert_eq!(self.n, rhs.n, "operators over different dimensions");
    }

    /// Operator product `self ∘ rhs` in canonical form.
    pub fn compose(&self, rhs: &DiffOp) -> DiffOp {
        self.check_dim(rhs);
        let mut out = DiffOp::zero(self.n);
        let ncoord = 2 * self.n + 1;
        for (beta, b) in &rhs.terms {
            let mut derivs: HashMap<Monomial, RationalFn> = HashMap::new();
            for (alpha, a) in &self.terms {
                for gamma in sub_indices(alpha, ncoord) {
                    let db = derivative(b, &gamma, &mut derivs);
                    if db.is_zero() {
                        continue;
                    }
                    let binom = multi_binomial(alpha, &gamma, ncoord);
                    let rest = gamma.quotient_of(alpha);
                    let coef = (a * &db).scale(&Scalar::from_int(binom));
                    out.add_term(rest.mul(beta), coef);
                }
            }
        }
        out
    }

    /// `A∘B - B∘A`.
    pub fn commutator(&self, rhs: &DiffOp) -> DiffOp {
        self.compose(rhs).sub(&rhs.compose(self))
    }

    /// `A^k` by repeated composition.
    pub fn pow(&self, k: u32) -> DiffOp {
        let mut acc = DiffOp::identity(self.n);
        for _ in 0..k {
            acc = acc.compose(self);
        }
        acc
    }

    /// Applies the operator to a function.
    pub fn apply(&self, f: &RationalFn) -> RationalFn {
        let mut cache = HashMap::new();
        let mut acc = RationalFn::zero();
        for (alpha, a) in &self.terms {
            let d = derivative(f, alpha, &mut cache);
            if !d.is_zero() {
                acc = &acc + &(a * &d);
            }
        }
        acc
    }

    /// Canonical text form naming variables through `vars`.
    pub fn display<'a>(&'a self, vars: &'a VarSet) -> impl fmt::Display + 'a {
        struct D<'a>(&'a DiffOp, &'a VarSet);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                if self.0.is_zero() {
                    return write!(f, "0");
                }
                for (k, (d, c)) in self.0.terms.iter().rev().enumerate() {
                    if k > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "({})", c.display(self.1))?;
                    for (i, &e) in d.exponents().iter().enumerate() {
                        if e > 0 {
                            write!(f, "*d{}", self.1.name(Var(i)))?;
                            if e > 1 {
                                write!(f, "^{e}")?;
                            }
                        }
                    }
                }
                Ok(())
            }
        }
        D(self, vars)
    }
}

impl fmt::Debug for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = VarSet::new(self.n);
        let shown = self.display(&vars).to_string();
        write!(f, "DiffOp[n={}]({})", self.n, shown)
    }
}

/// `op_equal(A, B)`: canonical forms coincide.
pub fn op_equal(a: &DiffOp, b: &DiffOp) -> bool {
    a == b
}

/// All multi-indices `γ ≤ α`, componentwise.
fn sub_indices(alpha: &Monomial, ncoord: usize) -> Vec<Monomial> {
    let exps = alpha.exponents();
    let mut out = vec![Vec::<u16>::new()];
    for i in 0..ncoord.min(exps.len()) {
        let mut next = Vec::with_capacity(out.len() * (exps[i] as usize + 1));
        for prefix in &out {
            for e in 0..=exps[i] {
                let mut p = prefix.clone();
                p.push(e);
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter().map(|v| Monomial::from_exponents(&v)).collect()
}

fn multi_binomial(alpha: &Monomial, gamma: &Monomial, ncoord: usize) -> i64 {
    let mut acc: i64 = 1;
    for i in 0..ncoord {
        let a = alpha.exponent(Var(i)) as i64;
        let g = gamma.exponent(Var(i)) as i64;
        acc *= binomial(a, g);
    }
    acc
}

fn binomial(n: i64, k: i64) -> i64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `∂^α f`, memoized through intermediate multi-indices.
fn derivative(f: &RationalFn, alpha: &Monomial, cache: &mut HashMap<Monomial, RationalFn>) -> RationalFn {
    if alpha.is_one() {
        return f.clone();
    }
    if let Some(d) = cache.get(alpha) {
        return d.clone();
    }
    // peel one derivative off the last nonzero slot
    let exps = alpha.exponents();
    let i = exps.len() - 1;
    let mut lower = alpha.clone();
    lower.set(Var(i), exps[i] - 1);
    let d = derivative(f, &lower, cache);
    let out = if d.is_zero() { d } else { d.partial(Var(i)) };
    cache.insert(alpha.clone(), out.clone());
    out
}

fn check_index(name: &str, j: usize, n: usize) -> Result<(), DiffOpError> {
    if j == 0 || j > n {
        return Err(DiffOpError::IndexOutOfRange {
            name: name.to_string(),
            index: j,
            n,
        });
    }
    Ok(())
}

/// Builds one of the named operators on `H^n`.
pub fn builtin(b: &Builtin, n: usize) -> Result<DiffOp, DiffOpError> {
    let vars = VarSet::new(n);
    let two = RationalFn::from_int(2);
    let dt = || DiffOp::partial(n, vars.t());
    Ok(match b {
        Builtin::X(j) => {
            check_index("X", *j, n)?;
            DiffOp::partial(n, vars.x(*j)).add(&dt().left_mul(&(&two * &RationalFn::var(vars.y(*j)))))
        }
        Builtin::Y(j) => {
            check_index("Y", *j, n)?;
            DiffOp::partial(n, vars.y(*j)).sub(&dt().left_mul(&(&two * &RationalFn::var(vars.x(*j)))))
        }
        Builtin::T => dt(),
        Builtin::Xtilde(j) => {
            check_index("Xt", *j, n)?;
            DiffOp::partial(n, vars.x(*j)).sub(&dt().left_mul(&(&two * &RationalFn::var(vars.y(*j)))))
        }
        Builtin::Ytilde(j) => {
            check_index("Yt", *j, n)?;
            DiffOp::partial(n, vars.y(*j)).add(&dt().left_mul(&(&two * &RationalFn::var(vars.x(*j)))))
        }
        Builtin::Z(j) => {
            let x = builtin(&Builtin::X(*j), n)?;
            let y = builtin(&Builtin::Y(*j), n)?;
            x.sub(&y.scale(&Scalar::i())).scale(&Scalar::ratio(1, 2))
        }
        Builtin::Zbar(j) => {
            let x = builtin(&Builtin::X(*j), n)?;
            let y = builtin(&Builtin::Y(*j), n)?;
            x.add(&y.scale(&Scalar::i())).scale(&Scalar::ratio(1, 2))
        }
        Builtin::Delta0 => {
            let mut acc = DiffOp::zero(n);
            for j in 1..=n {
                let x = builtin(&Builtin::X(j), n)?;
                let y = builtin(&Builtin::Y(j), n)?;
                acc = acc.add(&x.compose(&x)).add(&y.compose(&y));
            }
            acc
        }
        Builtin::L(c) => {
            let delta = builtin(&Builtin::Delta0, n)?;
            delta.scale(&Scalar::ratio(-1, 4)).add(&dt().left_mul(c))
        }
    })
}

/// Horizontal frame field `X_k` for `k = 1..2n`, with `X_{n+j} = Y_j`.
pub fn frame(n: usize, k: usize) -> DiffOp {
    assert!(k >= 1 && k <= 2 * n, "frame index {k} out of range");
    if k <= n {
        builtin(&Builtin::X(k), n).expect("in range")
    } else {
        builtin(&Builtin::Y(k - n), n).expect("in range")
    }
}

/// Right-invariant mirror of the frame field, `X̃_k` for `k = 1..2n`.
pub fn mirror_frame(n: usize, k: usize) -> DiffOp {
    assert!(k >= 1 && k <= 2 * n, "frame index {k} out of range");
    if k <= n {
        builtin(&Builtin::Xtilde(k), n).expect("in range")
    } else {
        builtin(&Builtin::Ytilde(k - n), n).expect("in range")
    }
}

/// Left-invariant field with value `w` at the origin.
pub fn left_invariant(w: &LieVector<Scalar>) -> DiffOp {
    combine(w, frame)
}

/// Right-invariant field `W̃` with value `w` at the origin.
pub fn right_invariant(w: &LieVector<Scalar>) -> DiffOp {
    combine(w, mirror_frame)
}

fn combine(w: &LieVector<Scalar>, field: fn(usize, usize) -> DiffOp) -> DiffOp {
    let n = w.n();
    let mut acc = DiffOp::partial(n, Var(2 * n)).scale(&w.c);
    for j in 1..=n {
        acc = acc.add(&field(n, j).scale(&w.a[j - 1]));
        acc = acc.add(&field(n, n + j).scale(&w.b[j - 1]));
    }
    acc
}

/// Parses the operator language: `X1 Y1 T Z1 Zbar1 Xt1 Yt1 Delta0 L(c)`,
/// composition with `*`, commutators `[A,B]`, powers `A^k`, and any
/// expression of the scalar grammar as a multiplication operator.
pub fn parse_op(src: &str, vars: &VarSet) -> Result<DiffOp, DiffOpError> {
    let e = parse_expr(src).map_err(AlgebraError::from)?;
    eval_op(&e, vars)
}

fn named(name: &str, n: usize) -> Option<Result<Builtin, DiffOpError>> {
    let split = |prefix: &str| -> Option<Result<usize, DiffOpError>> {
        let rest = name.strip_prefix(prefix)?;
        if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        Some(rest.parse::<usize>().map_err(|_| DiffOpError::UnknownOperator(name.into())))
    };
    if name == "T" {
        return Some(Ok(Builtin::T));
    }
    if name == "Delta0" {
        return Some(Ok(Builtin::Delta0));
    }
    // longest prefixes first so `Zbar1` is not read as `Z` + `bar1`
    let table: [(&str, fn(usize) -> Builtin); 6] = [
        ("Zbar", Builtin::Zbar),
        ("Xt", Builtin::Xtilde),
        ("Yt", Builtin::Ytilde),
        ("X", Builtin::X),
        ("Y", Builtin::Y),
        ("Z", Builtin::Z),
    ];
    for (prefix, ctor) in table {
        if let Some(j) = split(prefix) {
            return Some(j.and_then(|j| {
                check_index(prefix, j, n)?;
                Ok(ctor(j))
            }));
        }
    }
    None
}

fn eval_op(e: &Expr, vars: &VarSet) -> Result<DiffOp, DiffOpError> {
    let n = vars.n();
    Ok(match e {
        Expr::Name(name) => match named(name, n) {
            Some(b) => builtin(&b?, n)?,
            None => DiffOp::multiply_by(n, crate::algebra::eval_name(name, vars)?),
        },
        Expr::Call(name, arg) if name == "L" => {
            let c = eval_op(arg, vars)?.as_function().ok_or(DiffOpError::NotZeroOrder)?;
            builtin(&Builtin::L(c), n)?
        }
        Expr::Call(name, _) => return Err(DiffOpError::UnknownOperator(name.clone())),
        Expr::Int(_) => DiffOp::multiply_by(n, crate::algebra::eval_rational(e, vars)?),
        Expr::Neg(a) => eval_op(a, vars)?.neg(),
        Expr::Add(a, b) => eval_op(a, vars)?.add(&eval_op(b, vars)?),
        Expr::Sub(a, b) => eval_op(a, vars)?.sub(&eval_op(b, vars)?),
        Expr::Mul(a, b) => eval_op(a, vars)?.compose(&eval_op(b, vars)?),
        Expr::Div(a, b) => {
            let f = eval_op(b, vars)?.as_function().ok_or(DiffOpError::NotZeroOrder)?;
            eval_op(a, vars)?.left_mul(&f.inv()?)
        }
        Expr::Pow(a, k) => {
            if *k < 0 {
                return Err(DiffOpError::NegativePower);
            }
            eval_op(a, vars)?.pow(*k as u32)
        }
        Expr::Bracket(a, b) => eval_op(a, vars)?.commutator(&eval_op(b, vars)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_rational;

    fn op(src: &str, n: usize) -> DiffOp {
        parse_op(src, &VarSet::new(n)).unwrap()
    }

    #[test]
    fn x1_applied_to_t() {
        let vs = VarSet::new(1);
        let x1 = builtin(&Builtin::X(1), 1).unwrap();
        let t = RationalFn::var(vs.t());
        assert_eq!(x1.apply(&t), parse_rational("2*y1", &vs).unwrap());
    }

    #[test]
    fn l0_is_quarter_laplacian() {
        let l0 = builtin(&Builtin::L(RationalFn::zero()), 1).unwrap();
        let delta = builtin(&Builtin::Delta0, 1).unwrap();
        assert_eq!(l0, delta.scale(&Scalar::ratio(-1, 4)));
    }

    #[test]
    fn xtilde_expanded() {
        let xt = builtin(&Builtin::Xtilde(1), 1).unwrap();
        assert_eq!(xt, op("Xt1", 1));
        let vs = VarSet::new(1);
        let expect = DiffOp::partial(1, vs.x(1))
            .sub(&DiffOp::partial(1, vs.t()).left_mul(&parse_rational("2*y1", &vs).unwrap()));
        assert_eq!(xt, expect);
    }

    #[test]
    fn out_of_range_index() {
        assert!(matches!(
            builtin(&Builtin::X(2), 1),
            Err(DiffOpError::IndexOutOfRange { .. })
        ));
        assert!(parse_op("Y3", &VarSet::new(2)).is_err());
        assert!(parse_op("X0", &VarSet::new(2)).is_err());
    }

    #[test]
    fn compose_examples() {
        let vs = VarSet::new(1);
        let tt = op("T*T", 1);
        assert_eq!(tt, DiffOp::partial(1, vs.t()).pow(2));
        let lhs = op("(x1*T)*(y1*T)", 1);
        let rhs = op("x1*y1*T^2", 1);
        assert_eq!(lhs, rhs);
    }

    /// Applies X₁∘X₁ and the expanded operator to a basis of monomials.
    #[test]
    fn x1_squared_against_basis() {
        let vs = VarSet::new(1);
        let x1 = op("X1", 1);
        let sq = x1.compose(&x1);
        let expanded = op("x1^0*X1^2", 1);
        assert_eq!(sq, expanded);
        for f in ["x1^2", "x1*t", "t^2", "y1*t^3", "x1^2*y1^2"] {
            let f = parse_rational(f, &vs).unwrap();
            assert_eq!(sq.apply(&f), x1.apply(&x1.apply(&f)));
        }
        // ∂x² + 4y ∂x∂t + 4y² ∂t², no first-order part
        let expect = DiffOp::partial(1, vs.x(1))
            .pow(2)
            .add(&DiffOp::partial(1, vs.x(1)).compose(&DiffOp::partial(1, vs.t())).left_mul(&parse_rational("4*y1", &vs).unwrap()))
            .add(&DiffOp::partial(1, vs.t()).pow(2).left_mul(&parse_rational("4*y1^2", &vs).unwrap()));
        assert_eq!(sq, expect);
    }

    #[test]
    fn commutator_examples() {
        assert_eq!(op("[X1, Y1]", 1), op("-4*T", 1));
        assert!(op("[X1, X2]", 2).is_zero());
        assert!(op("[Xt1, Y1]", 1).is_zero());
    }

    #[test]
    fn apply_examples() {
        let vs = VarSet::new(1);
        let delta = op("Delta0", 1);
        assert_eq!(delta.apply(&parse_rational("x1^2 + y1^2", &vs).unwrap()), RationalFn::from_int(4));
        let zbar = op("Zbar1", 1);
        assert!(zbar.apply(&parse_rational("x1 + i*y1", &vs).unwrap()).is_zero());
        assert!(op("T", 1).apply(&RationalFn::var(vs.x(1))).is_zero());
    }

    #[test]
    fn op_equal_examples() {
        let lhs = op("4*Z1*Z2", 2);
        let rhs = op("(X1*X2 - Y1*Y2) - i*(X1*Y2 + Y1*X2)", 2);
        assert!(op_equal(&lhs, &rhs));
        // with a plus sign on the imaginary part the right side is 4 Z̄₁Z̄₂
        let plus = op("(X1*X2 - Y1*Y2) + i*(X1*Y2 + Y1*X2)", 2);
        assert!(!op_equal(&lhs, &plus));
        assert!(op_equal(&op("4*Zbar1*Zbar2", 2), &plus));
        let half = op("Delta0/2", 1);
        assert!(op_equal(&half, &op("Z1*Zbar1 + Zbar1*Z1", 1)));
        assert!(!op_equal(&op("X1", 1), &op("Y1", 1)));
    }

    #[test]
    fn division_needs_a_function() {
        assert_eq!(parse_op("X1/Y1", &VarSet::new(1)), Err(DiffOpError::NotZeroOrder));
        assert_eq!(parse_op("X1^-1", &VarSet::new(1)), Err(DiffOpError::NegativePower));
        assert!(matches!(parse_op("Q(1)", &VarSet::new(1)), Err(DiffOpError::UnknownOperator(_))));
    }
}
