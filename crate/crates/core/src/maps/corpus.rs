//! Closed-form conformal maps with exact inverses, and composition.

use std::str::FromStr;

use crate::algebra::{parse_rational, RationalFn, Scalar, VarSet};
use crate::group::Point;
use crate::report::{Report, Residual};

use super::{lambda, substitute_coords, ContactMap, MapError};

/// Members of the built-in corpus. `None` fields take defaults.
#[derive(Clone, Debug, PartialEq)]
pub enum Corpus {
    Identity,
    /// Left translation `p ↦ q * p`.
    Translation(Option<Vec<Scalar>>),
    /// `(x, y, t) ↦ (r x, r y, r² t)`; `None` keeps `r` formal.
    Dilation(Option<Scalar>),
    /// `(z, t) ↦ (U z, t)` for an exactly unitary `U`.
    Rotation(Option<Vec<Vec<Scalar>>>),
    /// Korányi-type inversion `(z, t) ↦ (−z/(|z|² − i t), −t/(|z|⁴ + t²))`.
    Inversion,
}

/// Names accepted by [`Corpus::from_str`].
pub const CORPUS_NAMES: [&str; 5] = ["identity", "translation", "dilation", "rotation", "inversion"];

impl Corpus {
    /// The standard corpus with default arguments.
    pub fn standard() -> Vec<Corpus> {
        vec![
            Corpus::Identity,
            Corpus::Translation(None),
            Corpus::Dilation(None),
            Corpus::Rotation(None),
            Corpus::Inversion,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Corpus::Identity => "identity",
            Corpus::Translation(_) => "translation",
            Corpus::Dilation(_) => "dilation",
            Corpus::Rotation(_) => "rotation",
            Corpus::Inversion => "inversion",
        }
    }

    /// Whether every component is a polynomial.
    pub fn is_polynomial(&self) -> bool {
        !matches!(self, Corpus::Inversion)
    }
}

impl FromStr for Corpus {
    type Err = MapError;

    /// `name` or `name:key=value`, e.g. `dilation:r=2`,
    /// `translation:q=1,0,3`.
    fn from_str(s: &str) -> Result<Self, MapError> {
        let unknown = || MapError::UnknownMap(s.to_string());
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a.trim(), Some(b.trim())),
            None => (s.trim(), None),
        };
        let scalar = |v: &str| -> Result<Scalar, MapError> {
            let f = parse_rational(v.trim(), &VarSet::new(1)).map_err(|_| unknown())?;
            f.constant_value().ok_or_else(unknown)
        };
        match (name, arg) {
            ("identity", None) => Ok(Corpus::Identity),
            ("translation", None) => Ok(Corpus::Translation(None)),
            ("translation", Some(a)) => {
                let v = a.strip_prefix("q=").ok_or_else(unknown)?;
                let q = v.split(',').map(scalar).collect::<Result<Vec<_>, _>>()?;
                Ok(Corpus::Translation(Some(q)))
            }
            ("dilation", None) => Ok(Corpus::Dilation(None)),
            ("dilation", Some(a)) => {
                let v = a.strip_prefix("r=").ok_or_else(unknown)?;
                Ok(Corpus::Dilation(Some(scalar(v)?)))
            }
            ("rotation", None) => Ok(Corpus::Rotation(None)),
            ("inversion", None) => Ok(Corpus::Inversion),
            _ => Err(unknown()),
        }
    }
}

/// Default rotation matrix: blocks of the unitary 2×2 matrix
/// `[[3/5, 4i/5], [4i/5, 3/5]]`, with `3/5 + 4i/5` filling an odd remainder.
#[allow(non_snake_case)]
pub fn DEFAULT_ROTATION(n: usize) -> Vec<Vec<Scalar>> {
    let a = Scalar::ratio(3, 5);
    let b = &Scalar::ratio(4, 5) * &Scalar::i();
    let mut u = vec![vec![Scalar::zero(); n]; n];
    let mut j = 0;
    while j + 1 < n {
        u[j][j] = a.clone();
        u[j][j + 1] = b.clone();
        u[j + 1][j] = b.clone();
        u[j + 1][j + 1] = a.clone();
        j += 2;
    }
    if j < n {
        u[j][j] = &a + &b;
    }
    u
}

/// Checks `U* U = I` exactly.
pub fn unitary_check(u: &[Vec<Scalar>]) -> Result<(), MapError> {
    let n = u.len();
    if u.iter().any(|row| row.len() != n) {
        return Err(MapError::NotUnitary);
    }
    for a in 0..n {
        for b in 0..n {
            let mut acc = Scalar::zero();
            for m in 0..n {
                acc += &(&u[m][a].conj() * &u[m][b]);
            }
            let expect = if a == b { Scalar::one() } else { Scalar::zero() };
            if acc != expect {
                return Err(MapError::NotUnitary);
            }
        }
    }
    Ok(())
}

fn default_translation(n: usize) -> Vec<Scalar> {
    let mut q: Vec<Scalar> = (1..=n).map(|j| Scalar::ratio(1, j as i64 + 1)).collect();
    q.extend((1..=n).map(|j| Scalar::from_int(-(j as i64))));
    q.push(Scalar::from_int(3));
    q
}

fn translation_components(vars: &VarSet, q: &[Scalar]) -> Vec<RationalFn> {
    let qp = Point::<RationalFn>::from_coords(&q.iter().cloned().map(RationalFn::constant).collect::<Vec<_>>())
        .expect("odd length");
    let p = Point::generic(vars);
    qp.mul(&p).expect("same n").coords()
}

/// Linear map `z ↦ U z` written in real coordinates.
fn rotation_components(vars: &VarSet, u: &[Vec<Scalar>]) -> Vec<RationalFn> {
    let n = vars.n();
    let mut comps = vec![RationalFn::zero(); 2 * n + 1];
    for k in 0..n {
        for j in 0..n {
            let re = u[k][j].real_part();
            let im = u[k][j].imag_part();
            let x = RationalFn::var(vars.x(j + 1));
            let y = RationalFn::var(vars.y(j + 1));
            comps[k] = &comps[k] + &(&x.scale(&re) - &y.scale(&im));
            comps[n + k] = &comps[n + k] + &(&x.scale(&im) + &y.scale(&re));
        }
    }
    comps[2 * n] = RationalFn::var(vars.t());
    comps
}

fn inversion_components(vars: &VarSet) -> Vec<RationalFn> {
    let n = vars.n();
    let mut r2 = RationalFn::zero();
    for j in 1..=n {
        let x = RationalFn::var(vars.x(j));
        let y = RationalFn::var(vars.y(j));
        r2 = &r2 + &(&(&x * &x) + &(&y * &y));
    }
    let t = RationalFn::var(vars.t());
    let norm = &(&r2 * &r2) + &(&t * &t);
    let inv = norm.inv().expect("nonzero");
    let mut comps = vec![RationalFn::zero(); 2 * n + 1];
    for j in 1..=n {
        let x = RationalFn::var(vars.x(j));
        let y = RationalFn::var(vars.y(j));
        comps[j - 1] = -(&(&(&x * &r2) - &(&y * &t)) * &inv);
        comps[n + j - 1] = -(&(&(&y * &r2) + &(&x * &t)) * &inv);
    }
    comps[2 * n] = -(&t * &inv);
    comps
}

/// Builds a corpus map on `H^n` with its inverse attached.
pub fn corpus(which: &Corpus, n: usize) -> Result<ContactMap, MapError> {
    let vars = VarSet::new(n);
    match which {
        Corpus::Identity => {
            let id: Vec<RationalFn> = (0..2 * n + 1).map(|i| RationalFn::var(vars.coord(i))).collect();
            ContactMap::new("identity", &vars, id.clone())?.with_inverse(id)
        }
        Corpus::Translation(q) => {
            let q = q.clone().unwrap_or_else(|| default_translation(n));
            if q.len() != 2 * n + 1 {
                return Err(MapError::ComponentCount {
                    n,
                    expected: 2 * n + 1,
                    got: q.len(),
                });
            }
            if q.iter().any(|c| !c.is_real()) {
                return Err(MapError::NotReal(0));
            }
            let qinv: Vec<Scalar> = q.iter().map(|c| -c).collect();
            ContactMap::new("translation", &vars, translation_components(&vars, &q))?
                .with_inverse(translation_components(&vars, &qinv))
        }
        Corpus::Dilation(r) => {
            let (vars, rf) = match r {
                Some(r) => {
                    if r.is_zero() || !r.is_real() {
                        return Err(MapError::NotSolvable("dilation factor must be a nonzero real".into()));
                    }
                    (vars, RationalFn::constant(r.clone()))
                }
                None => {
                    let vs = vars.extended("r");
                    let r = RationalFn::var(vs.param("r").expect("just added"));
                    (vs, r)
                }
            };
            let rinv = rf.inv()?;
            let scale = |s: &RationalFn| -> Vec<RationalFn> {
                let s2 = s * s;
                (0..2 * n + 1)
                    .map(|i| {
                        let v = RationalFn::var(vars.coord(i));
                        if i == 2 * n {
                            &s2 * &v
                        } else {
                            s * &v
                        }
                    })
                    .collect()
            };
            let name = match r {
                Some(r) => format!("dilation:r={r}"),
                None => "dilation".to_string(),
            };
            let m = ContactMap::new(name, &vars, scale(&rf))?
                .with_inverse(scale(&rinv))?
                .with_exclusion("r = 0");
            Ok(match r {
                Some(_) => m,
                None => m.with_sample("r", Scalar::from_int(2)),
            })
        }
        Corpus::Rotation(u) => {
            let u = u.clone().unwrap_or_else(|| DEFAULT_ROTATION(n));
            if u.len() != n {
                return Err(MapError::NotUnitary);
            }
            unitary_check(&u)?;
            let ustar: Vec<Vec<Scalar>> = (0..n).map(|a| (0..n).map(|b| u[b][a].conj()).collect()).collect();
            ContactMap::new("rotation", &vars, rotation_components(&vars, &u))?
                .with_inverse(rotation_components(&vars, &ustar))
        }
        Corpus::Inversion => {
            let comps = inversion_components(&vars);
            Ok(ContactMap::new("inversion", &vars, comps.clone())?
                .with_inverse(comps)?
                .with_exclusion("origin: |z|^4 + t^2 = 0"))
        }
    }
}

fn merged_vars(a: &VarSet, b: &VarSet) -> VarSet {
    b.params().iter().fold(a.clone(), |acc, p| acc.extended(p))
}

/// `F ∘ G`, with inverse `G⁻¹ ∘ F⁻¹` when both inverses are known.
pub fn compose_maps(f: &ContactMap, g: &ContactMap) -> Result<ContactMap, MapError> {
    if f.n() != g.n() {
        return Err(MapError::DimensionMismatch(f.n(), g.n()));
    }
    let vars = merged_vars(f.vars(), g.vars());
    let f = f.lift(&vars)?;
    let g = g.lift(&vars)?;
    let comps = f
        .components()
        .iter()
        .map(|c| substitute_coords(c, g.components()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = ContactMap::new(format!("{}∘{}", f.name, g.name), &vars, comps)?;
    if let (Some(fi), Some(gi)) = (f.inverse_components(), g.inverse_components()) {
        let inv = gi
            .iter()
            .map(|c| substitute_coords(c, fi))
            .collect::<Result<Vec<_>, _>>()?;
        out = out.with_inverse(inv)?;
    }
    let excl: Vec<&str> = [f.excluded(), g.excluded()].into_iter().flatten().collect();
    if !excl.is_empty() {
        out = out.with_exclusion(excl.join("; "));
    }
    for (p, v) in f.samples().iter().chain(g.samples()) {
        out = out.with_sample(p, v.clone());
    }
    Ok(out)
}

/// `λ_{F∘G} = (λ_F ∘ G) · λ_G`.
pub fn lambda_multiplicative(f: &ContactMap, g: &ContactMap) -> Result<Report, MapError> {
    let fg = compose_maps(f, g)?;
    let vars = fg.vars().clone();
    let f = f.lift(&vars)?;
    let g = g.lift(&vars)?;
    let mut rep = Report::new("lambda_multiplicative", &vars).for_map(&fg.name);
    let lhs = lambda(&fg)?;
    let rhs = &substitute_coords(&lambda(&f)?, g.components())? * &lambda(&g)?;
    rep.push(Residual::difference("lambda(F∘G)", &lhs, &rhs));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::super::{check_map, inverse_check, is_conformal, PositivityGrid};
    use super::*;

    #[test]
    fn translation_roundtrip() {
        let q = vec![Scalar::from_int(1), Scalar::from_int(2), Scalar::from_int(3)];
        let t = corpus(&Corpus::Translation(Some(q.clone())), 1).unwrap();
        let back = corpus(&Corpus::Translation(Some(q.iter().map(|c| -c).collect())), 1).unwrap();
        let id = compose_maps(&back, &t).unwrap();
        assert_eq!(id.components(), corpus(&Corpus::Identity, 1).unwrap().components());
    }

    #[test]
    fn translations_compose_by_group_law() {
        let p = vec![Scalar::from_int(1), Scalar::from_int(0), Scalar::from_int(0)];
        let q = vec![Scalar::from_int(0), Scalar::from_int(1), Scalar::from_int(0)];
        let tp = corpus(&Corpus::Translation(Some(p.clone())), 1).unwrap();
        let tq = corpus(&Corpus::Translation(Some(q.clone())), 1).unwrap();
        let pq = Point::from_coords(&p).unwrap().mul(&Point::from_coords(&q).unwrap()).unwrap();
        let tpq = corpus(&Corpus::Translation(Some(pq.coords())), 1).unwrap();
        assert_eq!(compose_maps(&tp, &tq).unwrap().components(), tpq.components());
    }

    #[test]
    fn rotation_default_is_unitary() {
        for n in 1..=3 {
            unitary_check(&DEFAULT_ROTATION(n)).unwrap();
        }
        let bad = vec![vec![Scalar::from_int(2)]];
        assert_eq!(unitary_check(&bad), Err(MapError::NotUnitary));
        assert!(corpus(&Corpus::Rotation(Some(bad)), 1).is_err());
    }

    #[test]
    fn rotation_passes_with_lambda_one() {
        let rot = corpus(&Corpus::Rotation(None), 1).unwrap();
        assert!(lambda(&rot).unwrap().is_one());
        assert!(check_map(&rot, &PositivityGrid::default()).passed());
    }

    #[test]
    fn dilation_inverse_pair() {
        let d = corpus(&Corpus::Dilation(None), 1).unwrap();
        let dinv = d.inverse_map().unwrap();
        let id = compose_maps(&d, &dinv).unwrap();
        assert_eq!(id.components(), corpus(&Corpus::Identity, 1).unwrap().lift(id.vars()).unwrap().components());
        assert!(inverse_check(&d).passed());
    }

    #[test]
    fn rotation_after_dilation() {
        let d = corpus(&Corpus::Dilation(None), 1).unwrap();
        let rot = corpus(&Corpus::Rotation(None), 1).unwrap();
        let m = compose_maps(&rot, &d).unwrap();
        assert!(is_conformal(&m, &PositivityGrid::default()).passed());
        assert_eq!(lambda(&m).unwrap(), parse_rational("r^2", m.vars()).unwrap());
        assert!(lambda_multiplicative(&rot, &d).unwrap().passed());
    }

    #[test]
    fn inversion_is_involution_n1() {
        let inv = corpus(&Corpus::Inversion, 1).unwrap();
        let twice = compose_maps(&inv, &inv).unwrap();
        assert_eq!(twice.components(), corpus(&Corpus::Identity, 1).unwrap().components());
        assert!(matches!(inv.eval(&[0.0, 0.0, 0.0]), Err(MapError::Excluded(_))));
        let img = inv.eval(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(img, vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn corpus_names_parse() {
        assert_eq!("dilation:r=2".parse::<Corpus>().unwrap(), Corpus::Dilation(Some(Scalar::from_int(2))));
        assert_eq!("translation:q=1,0,1/2".parse::<Corpus>().unwrap(), Corpus::Translation(Some(vec![Scalar::from_int(1), Scalar::zero(), Scalar::ratio(1, 2)])));
        assert!("nonexistent".parse::<Corpus>().is_err());
        assert!("dilation:s=2".parse::<Corpus>().is_err());
        for name in CORPUS_NAMES {
            assert_eq!(name.parse::<Corpus>().unwrap().name(), name);
        }
    }
}
