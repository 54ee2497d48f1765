//! Numeric flows: conformal flows `H_W(p, s) = G(exp(sW) * F(p))` with a
//! finite-difference check of their first variation, and the
//! Korányi–Reimann quasiconformal flows in [`kr`].

mod kr;

use thiserror::Error;

use crate::algebra::{AlgebraError, RationalFn, Scalar, VarSet, DEFAULT_POLE_THRESHOLD};
use crate::diffop::{frame, right_invariant};
use crate::group::{exp, LieVector, Point};
use crate::maps::{substitute_coords, ContactMap, MapError};
use crate::report::{Report, Residual};

pub use kr::{
    contact_data, default_kr_grid, distortion, horizontal_frame_matrix, integrate_flow, kr_bound, kr_experiment,
    kr_vector_field, write_traces_csv, FlowSample, FlowTrace, KRField, KRPotential, CONTACT_TOLERANCE,
    SUP_GRID_MAX_POINTS, SUP_GRID_PER_AXIS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    Config(String),
    #[error("point {0:?} is outside the domain of the map")]
    Domain(Vec<f64>),
    #[error("start point {start:?} is outside the box")]
    LeftBox { start: Vec<f64> },
    #[error("step halving changed the endpoint by {diff:.3e} (tolerance {tol:.1e})")]
    StepHalving { diff: f64, tol: f64 },
    #[error("singular frame matrix")]
    Singular,
    #[error("map `{0}` has no inverse")]
    NoInverse(String),
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Numeric settings shared by the flow checks.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    /// RK4 step.
    pub step: f64,
    pub s_max: f64,
    /// Central-difference step in `s`.
    pub fd_step: f64,
    /// Relative tolerance.
    pub tolerance: f64,
    /// Start or sample points; empty selects the defaults.
    pub grid: Vec<Vec<f64>>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            step: 1e-3,
            s_max: 1.0,
            fd_step: 1e-4,
            tolerance: 1e-6,
            grid: Vec::new(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let positive = [("step", self.step), ("fd_step", self.fd_step), ("tolerance", self.tolerance)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FlowError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.s_max >= 0.0 && self.s_max.is_finite()) {
            return Err(FlowError::Config(format!("s_max must be nonnegative, got {}", self.s_max)));
        }
        Ok(())
    }
}

fn check_point(n: usize, p: &[f64]) -> Result<(), FlowError> {
    if p.len() != 2 * n + 1 {
        return Err(FlowError::Dimension {
            expected: 2 * n + 1,
            got: p.len(),
        });
    }
    Ok(())
}

/// `H_W(p, s) = G(exp(sW) * F(p))`.
pub fn conformal_flow(f: &ContactMap, w: &LieVector<f64>, p: &[f64], s: f64) -> Result<Vec<f64>, FlowError> {
    check_point(f.n(), p)?;
    let fp = Point::from_coords(&f.eval(p)?).expect("2n+1 coordinates");
    let moved = exp(&w.scaled(&s)).mul(&fp).expect("same dimension");
    match f.eval_inverse(&moved.coords()) {
        Ok(v) => Ok(v),
        Err(MapError::NoInverse) => Err(FlowError::NoInverse(f.name.clone())),
        Err(MapError::Excluded(_)) => Err(FlowError::Domain(moved.coords())),
        Err(e) => Err(e.into()),
    }
}

/// Three deterministic sample points away from the origin and from the
/// vertical axis.
pub fn default_sample_points(n: usize) -> Vec<Vec<f64>> {
    let base: [(f64, f64, f64); 3] = [(1.0, 0.0, 1.0), (0.5, -0.25, 0.75), (-0.6, 0.8, -0.3)];
    base.iter()
        .map(|&(x, y, t)| {
            let mut p: Vec<f64> = (0..n).map(|j| x / (j + 1) as f64).collect();
            p.extend((0..n).map(|j| y + 0.1 * j as f64));
            p.push(t);
            p
        })
        .collect()
}

/// Richardson-extrapolated central difference of `v` at 0:
/// `(4 D(h/2) − D(h)) / 3` with `D(h) = (v(h) − v(−h)) / 2h`.
pub fn richardson_derivative(v: impl Fn(f64) -> Result<f64, FlowError>, h: f64) -> Result<f64, FlowError> {
    let d = |h: f64| -> Result<f64, FlowError> { Ok((v(h)? - v(-h)?) / (2.0 * h)) };
    let (dh, dh2) = (d(h)?, d(h / 2.0)?);
    Ok((4.0 * dh2 - dh) / 3.0)
}

/// The first variation of the conformal flow against its exact value:
/// `∂_s[X_k h_ℓ](p, 0) = X_k(W̃g_ℓ ∘ F)(p)` for all `k, ℓ ≤ 2n`, and
/// `X_ℓh_k(p, 0) = δ_{kℓ}` exactly.
///
/// `X_k h_ℓ` is formed symbolically with `s` as a formal parameter; only the
/// `s`-derivative is taken numerically. The error measure is
/// `|fd − exact| / max(|exact|, 1)`.
pub fn rivf_check(f: &ContactMap, w: &LieVector<Scalar>, p: &[f64], cfg: &FlowConfig) -> Result<Report, FlowError> {
    cfg.validate()?;
    let n = f.n();
    check_point(n, p)?;
    if w.n() != n {
        return Err(FlowError::Dimension {
            expected: n,
            got: w.n(),
        });
    }
    let g = f
        .inverse_components()
        .ok_or_else(|| FlowError::NoInverse(f.name.clone()))?
        .to_vec();
    let vars: VarSet = f.vars().extended("s");
    let lifted = f.lift(&vars)?;
    let s = RationalFn::var(vars.param("s").expect("just added"));
    let sym = |v: &Scalar| &RationalFn::constant(v.clone()) * &s;
    let q = Point {
        x: w.a.iter().map(sym).collect(),
        y: w.b.iter().map(sym).collect(),
        t: sym(&w.c),
    };
    let fp = Point::from_coords(lifted.components()).expect("2n+1 components");
    let moved = q.mul(&fp).expect("same dimension").coords();
    let inverse = lifted.inverse_components().expect("lift keeps the inverse");
    let h: Vec<RationalFn> = inverse
        .iter()
        .map(|gl| substitute_coords(gl, &moved))
        .collect::<Result<_, _>>()
        .map_err(MapError::from)?;
    let w_tilde = right_invariant(w);
    let mut point = p.to_vec();
    point.extend(f.sample_values());
    let s_slot = point.len();
    point.push(0.0);
    let mut rep = Report::new("rivf", &vars).for_map(&f.name);
    let zero_s = [(vars.param("s").expect("declared"), RationalFn::zero())];
    for l in 1..=2 * n {
        let exact_fn = substitute_coords(&w_tilde.apply(&g[l - 1]), f.components()).map_err(MapError::from)?;
        for k in 1..=2 * n {
            let xk = frame(n, k);
            let xh = xk.apply(&h[l - 1]).compile();
            let exact = xk
                .apply(&exact_fn)
                .eval_real(&point[..s_slot])
                .map_err(|_| FlowError::Domain(p.to_vec()))?;
            let at = |sv: f64| -> Result<f64, FlowError> {
                let mut q = point.clone();
                q[s_slot] = sv;
                xh.eval_real(&q, DEFAULT_POLE_THRESHOLD)
                    .map_err(|_| FlowError::Domain(p.to_vec()))
            };
            let fd = richardson_derivative(at, cfg.fd_step)?;
            let err = (fd - exact).abs() / exact.abs().max(1.0);
            rep.push(Residual::numeric(format!("d/ds X{k}h{l}"), err, cfg.tolerance));
        }
    }
    for k in 1..=2 * n {
        let h0 = h[k - 1].substitute(&zero_s)?;
        for l in 1..=2 * n {
            let delta = if k == l { RationalFn::one() } else { RationalFn::zero() };
            rep.push(Residual::difference(format!("X{l}h{k}(s=0)"), &frame(n, l).apply(&h0), &delta));
        }
    }
    rep.note(format!(
        "point {:?}, central differences h = {:e} and h/2 with Richardson extrapolation, tolerance {:e}",
        p, cfg.fd_step, cfg.tolerance
    ));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{corpus, Corpus};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn conformal_flow_examples() {
        let id = corpus(&Corpus::Identity, 1).unwrap();
        let p = [0.3, -0.7, 1.1];
        let h = conformal_flow(&id, &LieVector::t(1), &p, 0.5).unwrap();
        assert!(close(&h, &[0.3, -0.7, 1.6], 1e-15));
        let h = conformal_flow(&id, &LieVector::x(1, 1), &p, 0.5).unwrap();
        assert!(close(&h, &[0.8, -0.7, 1.1 - 2.0 * 0.5 * -0.7], 1e-15));
        let d2 = corpus(&Corpus::Dilation(Some(Scalar::from_int(2))), 1).unwrap();
        let h = conformal_flow(&d2, &LieVector::t(1), &p, 0.5).unwrap();
        assert!(close(&h, &[0.3, -0.7, 1.1 + 0.5 / 4.0], 1e-15));
        let inv = corpus(&Corpus::Inversion, 1).unwrap();
        assert!(close(&conformal_flow(&inv, &LieVector::y(1, 1), &p, 0.0).unwrap(), &p, 1e-14));
    }

    #[test]
    fn flow_property() {
        let inv = corpus(&Corpus::Inversion, 1).unwrap();
        let w = LieVector {
            a: vec![0.3],
            b: vec![-0.2],
            c: 0.7,
        };
        let p = [1.0, 0.0, 1.0];
        let (s, u) = (0.05, -0.02);
        let hs = conformal_flow(&inv, &w, &p, s).unwrap();
        let twice = conformal_flow(&inv, &w, &hs, u).unwrap();
        assert!(close(&twice, &conformal_flow(&inv, &w, &p, s + u).unwrap(), 1e-12));
    }

    #[test]
    fn rivf_examples() {
        let cfg = FlowConfig::default();
        let id = corpus(&Corpus::Identity, 1).unwrap();
        assert!(rivf_check(&id, &LieVector::t(1), &[0.2, 0.4, -1.0], &cfg).unwrap().passed());
        let d2 = corpus(&Corpus::Dilation(Some(Scalar::from_int(2))), 1).unwrap();
        assert!(rivf_check(&d2, &LieVector::t(1), &[1.0, 1.0, 1.0], &cfg).unwrap().passed());
        let inv = corpus(&Corpus::Inversion, 1).unwrap();
        let rep = rivf_check(&inv, &LieVector::x(1, 1), &[1.0, 0.0, 1.0], &cfg).unwrap();
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn rivf_detects_a_wrong_mirror() {
        // the left-invariant field in place of the mirror is not the first variation
        let inv = corpus(&Corpus::Inversion, 1).unwrap();
        let p = [0.5, -0.25, 0.75];
        let w = LieVector::<Scalar>::x(1, 1);
        let g = inv.inverse_components().unwrap();
        let wrong = substitute_coords(&crate::diffop::left_invariant(&w).apply(&g[0]), inv.components()).unwrap();
        let right = substitute_coords(&right_invariant(&w).apply(&g[0]), inv.components()).unwrap();
        let x1 = frame(1, 1);
        let a = x1.apply(&wrong).eval_real(&p).unwrap();
        let b = x1.apply(&right).eval_real(&p).unwrap();
        assert!((a - b).abs() > 1e-3);
        let rep = rivf_check(&inv, &w, &p, &FlowConfig::default()).unwrap();
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn richardson_is_fourth_order_accurate() {
        let d = richardson_derivative(|s| Ok((2.0 * s).sin()), 1e-2).unwrap();
        assert!((d - 2.0).abs() < 1e-8);
    }

    #[test]
    fn config_validation() {
        let bad = FlowConfig {
            step: 0.0,
            ..FlowConfig::default()
        };
        assert!(matches!(bad.validate(), Err(FlowError::Config(_))));
        assert!(FlowConfig::default().validate().is_ok());
    }
}
