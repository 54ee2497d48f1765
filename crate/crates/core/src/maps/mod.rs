//! Contact and conformal maps given by closed-form rational components.
//!
//! A [`ContactMap`] is `F = (f₁, …, f_{2n+1})`. The checks here verify the
//! contact equations, the conformality system `MᵀM = λ I` on the horizontal
//! Jacobian, the Cauchy–Riemann system and the λ identity exactly, and test
//! positivity of λ numerically on a grid.

mod corpus;
mod shear;
mod spec;

pub use corpus::{compose_maps, corpus, lambda_multiplicative, unitary_check, Corpus, CORPUS_NAMES, DEFAULT_ROTATION};
pub use shear::{shear_fixture, solve_vertical_component};
pub use spec::{parse_map_spec, SpecError};

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{AlgebraError, RationalFn, Scalar, Var, VarSet, DEFAULT_POLE_THRESHOLD};
use crate::diffop::{builtin, frame, Builtin};
use crate::report::{Report, Residual};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("expected {expected} components for n = {n}, got {got}")]
    ComponentCount { n: usize, expected: usize, got: usize },
    #[error("component f{0} is not real-valued")]
    NotReal(usize),
    #[error("the map is not contact: pullback coefficient `{0}` disagrees with λ")]
    NotContact(String),
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("point lies on the excluded set{}", .0.as_ref().map(|s| format!(" ({s})")).unwrap_or_default())]
    Excluded(Option<String>),
    #[error("map has no closed-form inverse")]
    NoInverse,
    #[error("unknown corpus map `{0}`")]
    UnknownMap(String),
    #[error("vertical component cannot be solved: {0}")]
    NotSolvable(String),
    #[error("maps live on different dimensions (n = {0} vs n = {1})")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// `F = (f₁, …, f_{2n+1})` with an optional closed-form inverse.
#[derive(Clone, PartialEq)]
pub struct ContactMap {
    pub name: String,
    vars: VarSet,
    components: Vec<RationalFn>,
    inverse: Option<Vec<RationalFn>>,
    excluded: Option<String>,
    samples: Vec<(String, Scalar)>,
}

impl fmt::Debug for ContactMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ContactMap {} over {}", self.name, self.vars)?;
        for (i, c) in self.components.iter().enumerate() {
            writeln!(f, "  f{} = {}", i + 1, c.display(&self.vars))?;
        }
        Ok(())
    }
}

impl ContactMap {
    pub fn new(name: impl Into<String>, vars: &VarSet, components: Vec<RationalFn>) -> Result<Self, MapError> {
        let n = vars.n();
        check_components(n, &components)?;
        Ok(ContactMap {
            name: name.into(),
            vars: vars.clone(),
            components,
            inverse: None,
            excluded: None,
            samples: Vec::new(),
        })
    }

    pub fn with_inverse(mut self, inverse: Vec<RationalFn>) -> Result<Self, MapError> {
        check_components(self.n(), &inverse)?;
        self.inverse = Some(inverse);
        Ok(self)
    }

    pub fn with_exclusion(mut self, description: impl Into<String>) -> Self {
        self.excluded = Some(description.into());
        self
    }

    /// Rational value used for parameter `name` in numeric checks.
    pub fn with_sample(mut self, name: &str, value: Scalar) -> Self {
        self.samples.retain(|(p, _)| p != name);
        self.samples.push((name.to_string(), value));
        self
    }

    pub fn n(&self) -> usize {
        self.vars.n()
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn components(&self) -> &[RationalFn] {
        &self.components
    }

    /// `f_k`, 1-based.
    pub fn f(&self, k: usize) -> &RationalFn {
        &self.components[k - 1]
    }

    pub fn inverse_components(&self) -> Option<&[RationalFn]> {
        self.inverse.as_deref()
    }

    pub fn excluded(&self) -> Option<&str> {
        self.excluded.as_deref()
    }

    pub fn samples(&self) -> &[(String, Scalar)] {
        &self.samples
    }

    /// The inverse as a map, with this map as its inverse.
    pub fn inverse_map(&self) -> Option<ContactMap> {
        let inv = self.inverse.as_ref()?;
        Some(ContactMap {
            name: format!("{}^-1", self.name),
            vars: self.vars.clone(),
            components: inv.clone(),
            inverse: Some(self.components.clone()),
            excluded: self.excluded.clone(),
            samples: self.samples.clone(),
        })
    }

    /// Re-expresses the map over a larger variable set with the same `n`
    /// whose parameters include all of this map's parameters.
    pub fn lift(&self, target: &VarSet) -> Result<ContactMap, MapError> {
        if target.n() != self.n() {
            return Err(MapError::DimensionMismatch(self.n(), target.n()));
        }
        if target == &self.vars {
            return Ok(self.clone());
        }
        let mut assignment = Vec::new();
        for (i, p) in self.vars.params().iter().enumerate() {
            let from = Var(self.vars.coord_count() + i);
            let to = target
                .param(p)
                .ok_or_else(|| AlgebraError::UnknownVariable(p.clone()))?;
            if from != to {
                assignment.push((from, RationalFn::var(to)));
            }
        }
        let move_all = |fs: &[RationalFn]| -> Result<Vec<RationalFn>, MapError> {
            fs.iter()
                .map(|f| f.substitute(&assignment).map_err(MapError::from))
                .collect()
        };
        Ok(ContactMap {
            name: self.name.clone(),
            vars: target.clone(),
            components: move_all(&self.components)?,
            inverse: match &self.inverse {
                Some(inv) => Some(move_all(inv)?),
                None => None,
            },
            excluded: self.excluded.clone(),
            samples: self.samples.clone(),
        })
    }

    /// Parameter values as a full evaluation point suffix.
    pub fn sample_values(&self) -> Vec<f64> {
        self.vars
            .params()
            .iter()
            .map(|p| {
                self.samples
                    .iter()
                    .find(|(name, _)| name == p)
                    .map(|(_, v)| v.to_complex().re)
                    .unwrap_or(1.0)
            })
            .collect()
    }

    /// Numeric image of a point (coordinates only; parameters take their
    /// sample values).
    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, MapError> {
        eval_components(&self.components, p, &self.sample_values(), self.excluded.as_deref())
    }

    /// Numeric image under the inverse map.
    pub fn eval_inverse(&self, p: &[f64]) -> Result<Vec<f64>, MapError> {
        let inv = self.inverse.as_ref().ok_or(MapError::NoInverse)?;
        eval_components(inv, p, &self.sample_values(), self.excluded.as_deref())
    }
}

fn check_components(n: usize, components: &[RationalFn]) -> Result<(), MapError> {
    if components.len() != 2 * n + 1 {
        return Err(MapError::ComponentCount {
            n,
            expected: 2 * n + 1,
            got: components.len(),
        });
    }
    if let Some(k) = components.iter().position(|c| !c.is_real()) {
        return Err(MapError::NotReal(k + 1));
    }
    Ok(())
}

fn eval_components(fs: &[RationalFn], p: &[f64], params: &[f64], excluded: Option<&str>) -> Result<Vec<f64>, MapError> {
    let mut point = p.to_vec();
    point.extend_from_slice(params);
    fs.iter()
        .map(|f| {
            f.compile()
                .eval_real(&point, DEFAULT_POLE_THRESHOLD)
                .map_err(|e| match e {
                    AlgebraError::NearPole { .. } => MapError::Excluded(excluded.map(str::to_string)),
                    other => MapError::Algebra(other),
                })
        })
        .collect()
}

/// Substitutes `images` for the coordinates `x.., y.., t` of `f`.
pub fn substitute_coords(f: &RationalFn, images: &[RationalFn]) -> Result<RationalFn, AlgebraError> {
    let assignment: Vec<(Var, RationalFn)> = images
        .iter()
        .enumerate()
        .map(|(i, g)| (Var(i), g.clone()))
        .collect();
    f.substitute(&assignment)
}

/// `λ_F` from the `T`-equation, without the cross-check.
fn lambda_raw(f: &ContactMap) -> RationalFn {
    let n = f.n();
    let t = f.vars.t();
    let mut acc = f.f(2 * n + 1).partial(t);
    for j in 1..=n {
        let a = f.f(j) * &f.f(n + j).partial(t);
        let b = f.f(n + j) * &f.f(j).partial(t);
        acc = &acc + &(&a - &b).scale(&Scalar::from_int(2));
    }
    acc
}

/// Coefficients of `F*α` on `dx₁.., dy₁.., dt`, with
/// `α = dt + 2 Σ (x_k dy_k − y_k dx_k)`.
pub fn pullback_alpha(f: &ContactMap) -> Vec<RationalFn> {
    let n = f.n();
    (0..2 * n + 1)
        .map(|i| {
            let v = Var(i);
            let mut acc = f.f(2 * n + 1).partial(v);
            for j in 1..=n {
                let a = f.f(j) * &f.f(n + j).partial(v);
                let b = f.f(n + j) * &f.f(j).partial(v);
                acc = &acc + &(&a - &b).scale(&Scalar::from_int(2));
            }
            acc
        })
        .collect()
}

/// `λ_F`, computed from the `T`-equation and cross-checked against the
/// pullback `F*α = λ_F α`.
pub fn lambda(f: &ContactMap) -> Result<RationalFn, MapError> {
    let n = f.n();
    let lam = lambda_raw(f);
    let pb = pullback_alpha(f);
    let vars = &f.vars;
    for j in 1..=n {
        let x = RationalFn::var(vars.x(j));
        let y = RationalFn::var(vars.y(j));
        let dx = (&y * &lam).scale(&Scalar::from_int(-2));
        let dy = (&x * &lam).scale(&Scalar::from_int(2));
        if pb[j - 1] != dx {
            return Err(MapError::NotContact(format!("dx{j}")));
        }
        if pb[n + j - 1] != dy {
            return Err(MapError::NotContact(format!("dy{j}")));
        }
    }
    if pb[2 * n] != lam {
        return Err(MapError::NotContact("dt".into()));
    }
    Ok(lam)
}

/// The contact equations `X_k f_{2n+1} + 2 Σ (f_j X_k f_{n+j} − f_{n+j} X_k f_j) = 0`.
pub fn is_contact(f: &ContactMap) -> Report {
    let n = f.n();
    let mut rep = Report::new("is_contact", &f.vars).for_map(&f.name);
    for k in 1..=2 * n {
        let xk = frame(n, k);
        let mut acc = xk.apply(f.f(2 * n + 1));
        for j in 1..=n {
            let a = f.f(j) * &xk.apply(f.f(n + j));
            let b = f.f(n + j) * &xk.apply(f.f(j));
            acc = &acc + &(&a - &b).scale(&Scalar::from_int(2));
        }
        rep.push(Residual::symbolic(format!("contact-X{k}"), acc));
    }
    rep
}

/// Square matrix of rational functions.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    pub entries: Vec<Vec<RationalFn>>,
}

impl RatMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, r: usize, c: usize) -> &RationalFn {
        &self.entries[r][c]
    }

    /// `MᵀM`.
    pub fn gram(&self) -> RatMatrix {
        let d = self.size();
        let mut out = vec![vec![RationalFn::zero(); d]; d];
        for a in 0..d {
            for b in a..d {
                let mut acc = RationalFn::zero();
                for m in 0..d {
                    acc = &acc + &(&self.entries[m][a] * &self.entries[m][b]);
                }
                out[b][a] = acc.clone();
                out[a][b] = acc;
            }
        }
        RatMatrix { entries: out }
    }

    /// Exact determinant by Gaussian elimination over the rational-function
    /// field. Every pivot is the smallest nonzero entry of the remaining
    /// block; for the Jacobians of conformal maps the Schur complements then
    /// stay close to the size of the result, unlike fraction-free schemes
    /// whose polynomial numerators grow with the cleared denominators.
    pub fn det(&self) -> RationalFn {
        let d = self.size();
        let mut a = self.entries.clone();
        let mut acc = RationalFn::one();
        for k in 0..d {
            let size = |e: &RationalFn| e.numer().len() + e.denom().len();
            let Some((pr, pc)) = (k..d)
                .flat_map(|r| (k..d).map(move |c| (r, c)))
                .filter(|&(r, c)| !a[r][c].is_zero())
                .min_by_key(|&(r, c)| size(&a[r][c]))
            else {
                return RationalFn::zero();
            };
            if pr != k {
                a.swap(pr, k);
                acc = -&acc;
            }
            if pc != k {
                for row in a.iter_mut() {
                    row.swap(pc, k);
                }
                acc = -&acc;
            }
            let piv = a[k][k].clone();
            acc = &acc * &piv;
            let pivot_row: Vec<RationalFn> = a[k][k + 1..].to_vec();
            for row in a.iter_mut().skip(k + 1) {
                if row[k].is_zero() {
                    continue;
                }
                let factor = row[k].checked_div(&piv).expect("pivot is nonzero");
                for (j, pk) in pivot_row.iter().enumerate() {
                    if !pk.is_zero() {
                        row[k + 1 + j] = &row[k + 1 + j] - &(&factor * pk);
                    }
                }
            }
        }
        acc
    }
}

/// `D₀F` in the invariant frames: entry `(m, k) = X_k f_m` for `m, k ≤ 2n`.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalMatrix(pub RatMatrix);

impl HorizontalMatrix {
    pub fn entry(&self, m: usize, k: usize) -> &RationalFn {
        self.0.get(m - 1, k - 1)
    }

    pub fn det(&self) -> RationalFn {
        self.0.det()
    }
}

pub fn horizontal_jacobian(f: &ContactMap) -> HorizontalMatrix {
    let n = f.n();
    let fields: Vec<_> = (1..=2 * n).map(|k| frame(n, k)).collect();
    let entries = (1..=2 * n)
        .map(|m| fields.iter().map(|xk| xk.apply(f.f(m))).collect())
        .collect();
    HorizontalMatrix(RatMatrix { entries })
}

/// Coordinate Jacobian `∂f_m/∂v_a`, of size `2n+1`.
pub fn full_jacobian(f: &ContactMap) -> RatMatrix {
    let d = 2 * f.n() + 1;
    let entries = (0..d)
        .map(|m| (0..d).map(|a| f.components[m].partial(Var(a))).collect())
        .collect();
    RatMatrix { entries }
}

/// Sample grid for the numeric positivity test of λ.
#[derive(Clone, Debug, PartialEq)]
pub struct PositivityGrid {
    pub points_per_axis: usize,
    pub half_width: f64,
}

impl Default for PositivityGrid {
    fn default() -> Self {
        PositivityGrid {
            points_per_axis: 5,
            half_width: 2.0,
        }
    }
}

impl PositivityGrid {
    pub fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        let k = self.points_per_axis;
        let axis: Vec<f64> = if k == 1 {
            vec![0.0]
        } else {
            (0..k)
                .map(|i| -self.half_width + 2.0 * self.half_width * i as f64 / (k - 1) as f64)
                .collect()
        };
        let total = k.pow(dim as u32);
        (0..total)
            .map(|mut idx| {
                (0..dim)
                    .map(|_| {
                        let v = axis[idx % k];
                        idx /= k;
                        v
                    })
                    .collect()
            })
            .collect()
    }
}

/// Numeric positivity of `λ` on the grid; points near poles are skipped.
pub fn lambda_positive(f: &ContactMap, lam: &RationalFn, grid: &PositivityGrid) -> Residual {
    let compiled = lam.compile();
    let params = f.sample_values();
    let evals: Vec<Option<f64>> = grid
        .points(2 * f.n() + 1)
        .into_par_iter()
        .map(|mut p| {
            p.extend_from_slice(&params);
            compiled.eval_real(&p, DEFAULT_POLE_THRESHOLD).ok()
        })
        .collect();
    let skipped = evals.iter().filter(|e| e.is_none()).count();
    let values: Vec<f64> = evals.into_iter().flatten().collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let holds = !values.is_empty() && min > 0.0;
    let mut detail = format!(
        "min λ = {min:.6e} over {} points ({skipped} skipped near poles)",
        values.len()
    );
    if !f.samples.is_empty() {
        let s: Vec<String> = f
            .samples
            .iter()
            .map(|(p, v)| format!("{p}={v}"))
            .collect();
        detail.push_str(&format!(" with {}", s.join(", ")));
    }
    Residual::predicate("lambda-positive", holds, detail)
}

/// Largest `n` at which Jacobian determinants are expanded symbolically.
/// Beyond it the rational-function elimination for the inversion no longer
/// fits in memory and [`gram_certified_det`] is used instead.
pub const DIRECT_DET_MAX_N: usize = 2;

/// Exact rational points tried when a certificate needs one evaluation.
fn exact_points(f: &ContactMap) -> impl Iterator<Item = Vec<Scalar>> + '_ {
    let coords = f.vars.coord_count();
    (0..8i64).map(move |shift| {
        let mut p: Vec<Scalar> = (0..coords)
            .map(|i| Scalar::ratio(i as i64 + 1 + shift, i as i64 + 2 + 3 * shift))
            .collect();
        for name in f.vars.params() {
            let v = f
                .samples
                .iter()
                .find(|(s, _)| s == name)
                .map(|(_, v)| v.clone())
                .unwrap_or_else(Scalar::one);
            p.push(v);
        }
        p
    })
}

/// Determinant of an exact scalar matrix.
fn scalar_det(mut a: Vec<Vec<Scalar>>) -> Scalar {
    let d = a.len();
    let mut acc = Scalar::one();
    for k in 0..d {
        let Some(piv) = (k..d).find(|&r| !a[r][k].is_zero()) else {
            return Scalar::zero();
        };
        if piv != k {
            a.swap(piv, k);
            acc = -acc;
        }
        let inv = a[k][k].inv().expect("nonzero pivot");
        acc = &acc * &a[k][k];
        for r in k + 1..d {
            let factor = &a[r][k] * &inv;
            for c in k..d {
                let v = &a[k][c] * &factor;
                a[r][c] -= &v;
            }
        }
    }
    acc
}

/// `J₀F` for a real map whose Gram identity `MᵀM = λ·I` has been verified
/// exactly.
///
/// Then `(det M)² = λ^{2n}` in the field of rational functions, and since
/// that field has no zero divisors `det M = ±λⁿ`. One exact evaluation at a
/// rational point where `λ ≠ 0` picks the sign. Returns `None` when no
/// usable point is found or the map is not real.
pub fn gram_certified_det(f: &ContactMap, m: &HorizontalMatrix, lam_n: &RationalFn) -> Option<RationalFn> {
    if !f.components.iter().all(RationalFn::is_real) {
        return None;
    }
    let d = m.0.size();
    for p in exact_points(f) {
        let Ok(target) = lam_n.eval_exact(&p) else { continue };
        if target.is_zero() {
            continue;
        }
        let entries: Result<Vec<Vec<Scalar>>, _> = (0..d)
            .map(|r| (0..d).map(|c| m.0.get(r, c).eval_exact(&p)).collect())
            .collect();
        let Ok(entries) = entries else { continue };
        let det = scalar_det(entries);
        if det == target {
            return Some(lam_n.clone());
        }
        if det == -target {
            return Some(-lam_n);
        }
        return None;
    }
    None
}

/// Definition of conformality: contact, `MᵀM = λ I`, `J₀F = λⁿ`,
/// `JF = λ^{n+1}` exactly, and `λ > 0` on the grid.
pub fn is_conformal(f: &ContactMap, grid: &PositivityGrid) -> Report {
    let n = f.n();
    let mut rep = Report::new("is_conformal", &f.vars).for_map(&f.name);
    rep.absorb(is_contact(f));
    let lam = match lambda(f) {
        Ok(l) => l,
        Err(e) => {
            rep.push(Residual::predicate("lambda", false, e.to_string()));
            return rep;
        }
    };
    let m = horizontal_jacobian(f);
    let gram = m.0.gram();
    for a in 0..2 * n {
        for b in a..2 * n {
            let expect = if a == b { lam.clone() } else { RationalFn::zero() };
            rep.push(Residual::difference(
                format!("MtM({},{})", a + 1, b + 1),
                gram.get(a, b),
                &expect,
            ));
        }
    }
    let lam_n = lam.pow(n as i32).expect("positive power");
    let lam_n1 = &lam_n * &lam;
    let gram_ok = rep.residuals.iter().all(Residual::passed);
    let certified = if n > DIRECT_DET_MAX_N && gram_ok {
        gram_certified_det(f, &m, &lam_n)
    } else {
        None
    };
    match certified {
        Some(j0) => {
            rep.note("J₀F from the Gram certificate, JF = λ·J₀F from the contact block structure");
            rep.push(Residual::difference("J0-lambda^n", &j0, &lam_n));
            rep.push(Residual::difference("J-lambda^(n+1)", &(&j0 * &lam), &lam_n1));
        }
        None => {
            rep.push(Residual::difference("J0-lambda^n", &m.det(), &lam_n));
            rep.push(Residual::difference("J-lambda^(n+1)", &full_jacobian(f).det(), &lam_n1));
        }
    }
    if !f.samples.is_empty() {
        rep.note("λ positivity evaluated at sample parameter values only");
    }
    rep.push(lambda_positive(f, &lam, grid));
    rep
}

/// `Z̄_ℓ (f_k + i f_{n+k}) = 0` for all `1 ≤ k, ℓ ≤ n`.
pub fn cr_check(f: &ContactMap) -> Report {
    let n = f.n();
    let mut rep = Report::new("cr_check", &f.vars).for_map(&f.name);
    for k in 1..=n {
        let fc = f.f(k) + &(f.f(n + k) * &RationalFn::i());
        for l in 1..=n {
            let zbar = builtin(&Builtin::Zbar(l), n).expect("in range");
            rep.push(Residual::symbolic(format!("Zbar{l}(f{k}+i*f{})", n + k), zbar.apply(&fc)));
        }
    }
    rep
}

/// `λ_F = Σ_j (X_{n+ν} f_{n+j} X_ν f_j − X_{n+ν} f_j X_ν f_{n+j})` for each ν.
pub fn lambda_nu_check(f: &ContactMap) -> Report {
    let n = f.n();
    let mut rep = Report::new("lambda_nu_check", &f.vars).for_map(&f.name);
    let lam = lambda_raw(f);
    let m = horizontal_jacobian(f);
    for nu in 1..=n {
        let mut acc = RationalFn::zero();
        for j in 1..=n {
            let a = m.entry(n + j, n + nu) * m.entry(j, nu);
            let b = m.entry(j, n + nu) * m.entry(n + j, nu);
            acc = &acc + &(&a - &b);
        }
        rep.push(Residual::difference(format!("nu={nu}"), &lam, &acc));
    }
    rep
}

/// `G ∘ F = id` and `F ∘ G = id` for the attached inverse.
pub fn inverse_check(f: &ContactMap) -> Report {
    let mut rep = Report::new("inverse", &f.vars).for_map(&f.name);
    let Some(g) = f.inverse_components() else {
        rep.push(Residual::predicate("present", false, "no inverse attached"));
        return rep;
    };
    for (label, outer, inner) in [("G(F)", g, f.components()), ("F(G)", f.components(), g)] {
        for (i, c) in outer.iter().enumerate() {
            let id = RationalFn::var(Var(i));
            let r = match substitute_coords(c, inner) {
                Ok(v) => Residual::difference(format!("{label}{}", i + 1), &v, &id),
                Err(e) => Residual::predicate(format!("{label}{}", i + 1), false, e.to_string()),
            };
            rep.push(r);
        }
    }
    rep
}

/// Consequences of conformality used in the regularity argument:
/// `(X_ℓ g_k) ∘ F = λ⁻¹ X_k f_ℓ` for `k, ℓ ≤ 2n`, `X_k f_ℓ = X_{n+k} f_{n+ℓ}`
/// for `k, ℓ ≤ n`, and `λ_G ∘ F = 1/λ_F`.
pub fn derivative_identities(f: &ContactMap) -> Result<Report, MapError> {
    let n = f.n();
    let g = f.inverse_map().ok_or(MapError::NoInverse)?;
    let mut rep = Report::new("derivative_identities", &f.vars).for_map(&f.name);
    let lam = lambda(f)?;
    let lam_inv = lam.inv()?;
    let mf = horizontal_jacobian(f);
    let mg = horizontal_jacobian(&g);
    for k in 1..=2 * n {
        for l in 1..=2 * n {
            let lhs = substitute_coords(mg.entry(k, l), f.components())?;
            let rhs = &lam_inv * mf.entry(l, k);
            rep.push(Residual::difference(format!("Xg({k},{l})"), &lhs, &rhs));
        }
    }
    for k in 1..=n {
        for l in 1..=n {
            rep.push(Residual::difference(
                format!("Xf({k},{l})"),
                mf.entry(l, k),
                mf.entry(n + l, n + k),
            ));
        }
    }
    let lam_g = lambda(&g)?;
    let composed = substitute_coords(&lam_g, f.components())?;
    rep.push(Residual::difference("lambdaG(F)", &composed, &lam_inv));
    Ok(rep)
}

/// All exact map checks plus positivity, gathered into one report.
pub fn check_map(f: &ContactMap, grid: &PositivityGrid) -> Report {
    let mut rep = Report::new("check_map", &f.vars).for_map(&f.name);
    rep.absorb(is_conformal(f, grid));
    rep.absorb(cr_check(f));
    rep.absorb(lambda_nu_check(f));
    if f.inverse.is_some() {
        rep.absorb(inverse_check(f));
        match derivative_identities(f) {
            Ok(r) => rep.absorb(r),
            Err(e) => rep.push(Residual::predicate("derivative_identities", false, e.to_string())),
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_rational;

    fn map(n: usize, params: &[&str], comps: &[&str]) -> ContactMap {
        let vs = VarSet::with_params(n, params);
        let c = comps.iter().map(|s| parse_rational(s, &vs).unwrap()).collect();
        ContactMap::new("m", &vs, c).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let id = map(1, &[], &["x1", "y1", "t"]);
        assert!(lambda(&id).unwrap().is_one());
        let dil = map(1, &["r"], &["r*x1", "r*y1", "r^2*t"]);
        assert_eq!(lambda(&dil).unwrap(), parse_rational("r^2", dil.vars()).unwrap());
        let rot = map(1, &[], &["-y1", "x1", "t"]);
        assert!(lambda(&rot).unwrap().is_one());
        let bad = map(1, &[], &["x1", "y1", "t + x1"]);
        assert!(matches!(lambda(&bad), Err(MapError::NotContact(_))));
    }

    #[test]
    fn contact_examples() {
        let dil = map(2, &["r"], &["r*x1", "r*x2", "r*y1", "r*y2", "r^2*t"]);
        assert!(is_contact(&dil).passed());
        assert!(is_contact(&map(1, &[], &["-y1", "x1", "t"])).passed());
        let rep = is_contact(&map(1, &[], &["x1", "y1", "t + x1"]));
        assert!(!rep.passed());
        assert_eq!(rep.residuals[0], Residual::symbolic("contact-X1", RationalFn::one()));
        assert!(rep.residuals[1].passed());
    }

    #[test]
    fn horizontal_jacobian_examples() {
        let id = map(1, &[], &["x1", "y1", "t"]);
        let m = horizontal_jacobian(&id);
        assert!(m.entry(1, 1).is_one() && m.entry(1, 2).is_zero() && m.det().is_one());
        let dil = map(1, &["r"], &["r*x1", "r*y1", "r^2*t"]);
        let r = parse_rational("r", dil.vars()).unwrap();
        let m = horizontal_jacobian(&dil);
        assert_eq!(m.entry(1, 1), &r);
        assert!(m.entry(2, 1).is_zero());
        assert_eq!(m.det(), &r * &r);
        let rot = horizontal_jacobian(&map(1, &[], &["-y1", "x1", "t"]));
        assert_eq!(rot.entry(1, 2), &RationalFn::from_int(-1));
        assert!(rot.entry(2, 1).is_one());
        assert!(rot.det().is_one());
    }

    #[test]
    fn conformal_and_cr() {
        let dil = map(1, &["r"], &["r*x1", "r*y1", "r^2*t"]).with_sample("r", Scalar::from_int(2));
        assert!(is_conformal(&dil, &PositivityGrid::default()).passed());
        assert!(cr_check(&dil).passed());
        assert!(lambda_nu_check(&dil).passed());
        let conj = map(1, &[], &["x1", "-y1", "-t"]);
        assert!(!cr_check(&conj).passed());
    }

    #[test]
    fn determinant_of_singular_matrix() {
        let vs = VarSet::new(1);
        let x = parse_rational("x1", &vs).unwrap();
        let m = RatMatrix {
            entries: vec![vec![x.clone(), x.clone()], vec![x.clone(), x]],
        };
        assert!(m.det().is_zero());
    }

    #[test]
    fn grid_points() {
        let g = PositivityGrid::default();
        let pts = g.points(3);
        assert_eq!(pts.len(), 125);
        assert_eq!(pts[0], vec![-2.0, -2.0, -2.0]);
        assert_eq!(pts[124], vec![2.0, 2.0, 2.0]);
    }

    /// `Σ_j (X_{n+ν} f_{n+j} X_ν f_j − X_{n+j} f_ν X_j f_{n+ν})`, a tempting
    /// misplacement of the indices in the second product.
    fn misplaced_lambda_nu(f: &ContactMap, nu: usize) -> RationalFn {
        let n = f.n();
        let m = horizontal_jacobian(f);
        (1..=n).fold(RationalFn::zero(), |acc, j| {
            let a = m.entry(n + j, n + nu) * m.entry(j, nu);
            let b = m.entry(nu, n + j) * m.entry(n + nu, j);
            &acc + &(&a - &b)
        })
    }

    #[test]
    fn lambda_nu_index_placement() {
        let inv = corpus(&Corpus::Inversion, 2).unwrap();
        assert!(lambda_nu_check(&inv).passed());
        let lam = lambda_raw(&inv);
        assert!((1..=2).any(|nu| misplaced_lambda_nu(&inv, nu) != lam));
        // on a rotation both placements agree
        let rot = corpus(&Corpus::Rotation(None), 2).unwrap();
        let lam = lambda_raw(&rot);
        assert!((1..=2).all(|nu| misplaced_lambda_nu(&rot, nu) == lam));
    }

    #[test]
    fn gram_certificate_matches_direct_determinant() {
        for map in [corpus(&Corpus::Inversion, 2).unwrap(), corpus(&Corpus::Rotation(None), 2).unwrap()] {
            let m = horizontal_jacobian(&map);
            let lam_n = lambda(&map).unwrap().pow(2).unwrap();
            assert_eq!(gram_certified_det(&map, &m, &lam_n), Some(m.det()));
        }
        let vs = VarSet::new(2);
        let c: Vec<_> = ["x1", "x2", "y1", "y2", "t"].iter().map(|s| parse_rational(s, &vs).unwrap()).collect();
        let id = ContactMap::new("id", &vs, c).unwrap();
        let m = horizontal_jacobian(&id);
        assert_eq!(gram_certified_det(&id, &m, &RationalFn::one()), Some(RationalFn::one()));
    }

    #[test]
    fn large_n_uses_the_certificate() {
        let f = corpus(&Corpus::Dilation(None), DIRECT_DET_MAX_N + 1).unwrap();
        let rep = is_conformal(&f, &PositivityGrid::default());
        assert!(rep.passed());
        assert!(rep.notes.iter().any(|n| n.contains("Gram certificate")));
    }

    #[test]
    fn wrong_component_count() {
        let vs = VarSet::new(1);
        let err = ContactMap::new("bad", &vs, vec![RationalFn::zero(); 2]).unwrap_err();
        assert_eq!(err, MapError::ComponentCount { n: 1, expected: 3, got: 2 });
        let err = ContactMap::new("bad", &vs, vec![RationalFn::i(); 3]).unwrap_err();
        assert_eq!(err, MapError::NotReal(1));
    }
}
