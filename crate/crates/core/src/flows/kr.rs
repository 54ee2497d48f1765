//! Korányi–Reimann flows.
//!
//! For a potential `φ` the field `V = φT + ¼Σ_j (X_jφ Y_j − Y_jφ X_j)` is a
//! contact vector field whose flow maps `f_s` are quasiconformal with
//! `½(K + 1/K) = 1 + n(exp(s√2‖M‖_HS) − 1)`, `M_{jk} = ‖Z_jZ_kφ‖_∞`. The
//! experiment integrates the flow together with its variational equation and
//! compares the distortion of the horizontal differential with that bound.
//! The distortion ratio is a differential proxy for metric
//! quasiconformality, and polynomial potentials are not compactly
//! supported, so the comparison is local and empirical.

use std::io::Write;

use rayon::prelude::*;

use crate::algebra::{CompiledRational, RationalFn, VarSet, DEFAULT_POLE_THRESHOLD};
use crate::diffop::{builtin, frame, Builtin};
use crate::report::{Report, Residual};

use super::{check_point, FlowConfig, FlowError};

/// Points per axis for a sup-norm grid estimate.
pub const SUP_GRID_PER_AXIS: usize = 64;
/// Cap on the total number of sup-norm grid points; above it the points per
/// axis are reduced so that `per_axis^(2n+1)` stays below the cap.
pub const SUP_GRID_MAX_POINTS: usize = SUP_GRID_PER_AXIS * SUP_GRID_PER_AXIS * SUP_GRID_PER_AXIS;
/// Largest admissible contact defect `max_k |α(df_s X_k)|` along a trace.
pub const CONTACT_TOLERANCE: f64 = 1e-5;

/// A potential with its matrix of sup-norms over a box.
#[derive(Clone, Debug)]
pub struct KRPotential {
    pub phi: RationalFn,
    pub vars: VarSet,
    /// `[lo, hi]` per coordinate.
    pub bbox: Vec<(f64, f64)>,
    /// `M_{jk} = ‖Z_jZ_kφ‖_∞` over the box.
    pub m: Vec<Vec<f64>>,
    /// Whether `M` is exact (every `Z_jZ_kφ` constant) or a grid estimate.
    pub m_exact: bool,
}

fn grid_axis(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

/// Cartesian product of per-axis samples, first axis slowest.
fn product_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

impl KRPotential {
    /// `phi` must use only the coordinates of `vars` (no parameters).
    pub fn new(phi: RationalFn, vars: &VarSet, bbox: Vec<(f64, f64)>) -> Result<Self, FlowError> {
        let n = vars.n();
        if bbox.len() != 2 * n + 1 {
            return Err(FlowError::Dimension {
                expected: 2 * n + 1,
                got: bbox.len(),
            });
        }
        if bbox.iter().any(|&(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi) {
            return Err(FlowError::Config("box bounds must satisfy lo <= hi".into()));
        }
        let mut zz = vec![vec![RationalFn::zero(); n]; n];
        for j in 1..=n {
            for k in 1..=n {
                let zj = builtin(&Builtin::Z(j), n).expect("in range");
                let zk = builtin(&Builtin::Z(k), n).expect("in range");
                zz[j - 1][k - 1] = zj.compose(&zk).apply(&phi);
            }
        }
        let m_exact = zz.iter().flatten().all(|f| f.constant_value().is_some());
        let m = if m_exact {
            zz.iter()
                .map(|row| {
                    row.iter()
                        .map(|f| f.constant_value().expect("constant").to_complex().norm())
                        .collect()
                })
                .collect()
        } else {
            let dim = 2 * n + 1;
            let mut per_axis = SUP_GRID_PER_AXIS;
            while per_axis > 2 && per_axis.pow(dim as u32) > SUP_GRID_MAX_POINTS {
                per_axis -= 1;
            }
            let axes: Vec<Vec<f64>> = bbox.iter().map(|&(lo, hi)| grid_axis(lo, hi, per_axis)).collect();
            let points = product_grid(&axes);
            zz.iter()
                .map(|row| {
                    row.iter()
                        .map(|f| {
                            let c = f.compile();
                            points
                                .par_iter()
                                .filter_map(|p| c.eval_complex_at_real(p, DEFAULT_POLE_THRESHOLD).ok())
                                .map(|z| z.norm())
                                .reduce(|| 0.0, f64::max)
                        })
                        .collect()
                })
                .collect()
        };
        Ok(KRPotential {
            phi,
            vars: vars.clone(),
            bbox,
            m,
            m_exact,
        })
    }

    pub fn n(&self) -> usize {
        self.vars.n()
    }

    /// `‖M‖_HS`.
    pub fn hs_norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn bound(&self, s: f64) -> f64 {
        kr_bound(s, &self.m, self.n())
    }
}

/// `ρ = 1 + n(e^{s√2‖M‖_HS} − 1)`, `K = ρ + √(ρ² − 1)`.
pub fn kr_bound(s: f64, m: &[Vec<f64>], n: usize) -> f64 {
    let hs = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let rho = 1.0 + n as f64 * ((s * std::f64::consts::SQRT_2 * hs).exp() - 1.0);
    rho + (rho * rho - 1.0).max(0.0).sqrt()
}

/// The field `V` in coordinates, with its coordinate Jacobian, compiled for
/// evaluation.
#[derive(Clone, Debug)]
pub struct KRField {
    pub n: usize,
    /// `V` as coefficients of `∂x_j, ∂y_j, ∂t`.
    pub components: Vec<RationalFn>,
    compiled: Vec<CompiledRational>,
    jacobian: Vec<Vec<CompiledRational>>,
}

/// `V = φT + ¼Σ_j (X_jφ Y_j − Y_jφ X_j)` expanded in coordinates:
/// `V = Σ_j (−¼Y_jφ ∂x_j + ¼X_jφ ∂y_j) + (φ − ½Σ_j (x_jX_jφ + y_jY_jφ)) ∂t`.
pub fn kr_vector_field(phi: &KRPotential) -> KRField {
    let n = phi.n();
    let vars = &phi.vars;
    let quarter = RationalFn::ratio(1, 4);
    let half = RationalFn::ratio(1, 2);
    let xphi: Vec<RationalFn> = (1..=n).map(|j| frame(n, j).apply(&phi.phi)).collect();
    let yphi: Vec<RationalFn> = (1..=n).map(|j| frame(n, n + j).apply(&phi.phi)).collect();
    let mut components = Vec::with_capacity(2 * n + 1);
    components.extend(yphi.iter().map(|f| -&(&quarter * f)));
    components.extend(xphi.iter().map(|f| &quarter * f));
    let mut vt = phi.phi.clone();
    for j in 1..=n {
        let x = RationalFn::var(vars.x(j));
        let y = RationalFn::var(vars.y(j));
        let s = &(&x * &xphi[j - 1]) + &(&y * &yphi[j - 1]);
        vt = &vt - &(&half * &s);
    }
    components.push(vt);
    let compiled = components.iter().map(RationalFn::compile).collect();
    let jacobian = components
        .iter()
        .map(|c| (0..2 * n + 1).map(|a| c.partial(vars.coord(a)).compile()).collect())
        .collect();
    KRField {
        n,
        components,
        compiled,
        jacobian,
    }
}

impl KRField {
    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.compiled
            .iter()
            .map(|c| {
                c.eval_real(p, DEFAULT_POLE_THRESHOLD)
                    .map_err(|_| FlowError::Domain(p.to_vec()))
            })
            .collect()
    }

    pub fn jacobian(&self, p: &[f64]) -> Result<Vec<Vec<f64>>, FlowError> {
        self.jacobian
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| {
                        c.eval_real(p, DEFAULT_POLE_THRESHOLD)
                            .map_err(|_| FlowError::Domain(p.to_vec()))
                    })
                    .collect()
            })
            .collect()
    }
}

/// One sample of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSample {
    pub s: f64,
    pub point: Vec<f64>,
    /// Coordinate Jacobian of `f_s` at the start point.
    pub jacobian: Vec<Vec<f64>>,
    /// `D₀f_s` in the left-invariant frames.
    pub frame: Vec<Vec<f64>>,
    pub k_meas: f64,
    /// `λ = α(df_s T)`.
    pub lambda: f64,
    pub contact_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrace {
    pub start: Vec<f64>,
    pub samples: Vec<FlowSample>,
    /// First step time at which the trajectory was outside the box; the
    /// samples stop just before it, since `M` only bounds `Z_jZ_kφ` inside.
    pub left_box_at: Option<f64>,
}

/// Coordinate components of `X_k` at `p`, `k = 1..2n`.
fn frame_vector(p: &[f64], k: usize) -> Vec<f64> {
    let d = p.len();
    let n = (d - 1) / 2;
    let mut v = vec![0.0; d];
    v[k - 1] = 1.0;
    v[d - 1] = if k <= n { 2.0 * p[n + k - 1] } else { -2.0 * p[k - n - 1] };
    v
}

fn mat_vec(j: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    j.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `α_q(v) = v_t + 2Σ_j (q_{x_j} v_{y_j} − q_{y_j} v_{x_j})`.
fn alpha(q: &[f64], v: &[f64]) -> f64 {
    let n = (q.len() - 1) / 2;
    let mut acc = v[2 * n];
    for j in 0..n {
        acc += 2.0 * (q[j] * v[n + j] - q[n + j] * v[j]);
    }
    acc
}

/// Entry `(m, k) = Σ_a J[m][a]·(X_k)_a(p)` for `m, k ≤ 2n`: the horizontal
/// differential in the left-invariant frames (the `X_m`-coefficient of a
/// horizontal vector equals its `∂_m` coordinate).
pub fn horizontal_frame_matrix(j: &[Vec<f64>], p: &[f64]) -> Vec<Vec<f64>> {
    let h = p.len() - 1;
    let cols: Vec<Vec<f64>> = (1..=h).map(|k| mat_vec(j, &frame_vector(p, k))).collect();
    (0..h).map(|m| (0..h).map(|k| cols[k][m]).collect()).collect()
}

/// `(λ, defect)` for a differential `J` at `p` with image `q`:
/// `λ = α_q(J T)` and `defect = max_k |α_q(J X_k(p))|`.
pub fn contact_data(j: &[Vec<f64>], p: &[f64], q: &[f64]) -> (f64, f64) {
    let d = p.len();
    let mut t = vec![0.0; d];
    t[d - 1] = 1.0;
    let lambda = alpha(q, &mat_vec(j, &t));
    let defect = (1..d)
        .map(|k| alpha(q, &mat_vec(j, &frame_vector(p, k))).abs())
        .fold(0.0, f64::max);
    (lambda, defect)
}

/// `σ_max/σ_min` by one-sided Jacobi: column pairs are rotated until every
/// pair is orthogonal to `10⁻¹²` relative accuracy; the singular values are
/// then the column norms.
pub fn distortion(mh: &[Vec<f64>]) -> Result<f64, FlowError> {
    let d = mh.len();
    let mut cols: Vec<Vec<f64>> = (0..d).map(|k| mh.iter().map(|row| row[k]).collect()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..d {
            for k in i + 1..d {
                let a = dot(&cols[i], &cols[i]);
                let b = dot(&cols[k], &cols[k]);
                let g = dot(&cols[i], &cols[k]);
                if g.abs() <= 1e-12 * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..d {
                    let (u, v) = (cols[i][r], cols[k][r]);
                    cols[i][r] = c * u - s * v;
                    cols[k][r] = s * u + c * v;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sv: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > max * 1e-14) || max == 0.0 {
        return Err(FlowError::Singular);
    }
    Ok(max / min)
}

/// Right-hand side of the augmented system `p' = V(p)`, `J' = DV(p)·J`.
fn rhs(v: &KRField, y: &[f64], d: usize) -> Result<Vec<f64>, FlowError> {
    let p = &y[..d];
    let mut out = v.eval(p)?;
    let dv = v.jacobian(p)?;
    for r in 0..d {
        for c in 0..d {
            out.push((0..d).map(|a| dv[r][a] * y[d + a * d + c]).sum());
        }
    }
    Ok(out)
}

fn rk4_step(v: &KRField, y: &[f64], h: f64, d: usize) -> Result<Vec<f64>, FlowError> {
    let axpy = |a: &[f64], k: &[f64], c: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, y)| x + c * y).collect() };
    let k1 = rhs(v, y, d)?;
    let k2 = rhs(v, &axpy(y, &k1, h / 2.0), d)?;
    let k3 = rhs(v, &axpy(y, &k2, h / 2.0), d)?;
    let k4 = rhs(v, &axpy(y, &k3, h), d)?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn inside(p: &[f64], bbox: &[(f64, f64)]) -> bool {
    p.iter().zip(bbox).all(|(&x, &(lo, hi))| x >= lo - 1e-12 && x <= hi + 1e-12)
}

/// Fixed-step RK4 from `p0` over `[0, s_max]` with `steps` steps; returns
/// the augmented state after every step (index 0 is the start), stopping
/// before the first state outside the box.
fn run(v: &KRField, p0: &[f64], s_max: f64, steps: usize, bbox: &[(f64, f64)]) -> Result<Vec<Vec<f64>>, FlowError> {
    let d = p0.len();
    let h = if steps == 0 { 0.0 } else { s_max / steps as f64 };
    let mut y = p0.to_vec();
    for r in 0..d {
        for c in 0..d {
            y.push(if r == c { 1.0 } else { 0.0 });
        }
    }
    let mut states = vec![y.clone()];
    for _ in 0..steps {
        y = rk4_step(v, &y, h, d)?;
        if !inside(&y[..d], bbox) {
            break;
        }
        states.push(y.clone());
    }
    Ok(states)
}

fn step_count(cfg: &FlowConfig) -> usize {
    (cfg.s_max / cfg.step).ceil() as usize
}

/// Integrates `V` and its variational equation from `p0`, recording every
/// step until the trajectory leaves the box, and verifies by step halving that the endpoint (point and
/// Jacobian) is stable to `cfg.tolerance` relative accuracy.
pub fn integrate_flow(v: &KRField, p0: &[f64], bbox: &[(f64, f64)], cfg: &FlowConfig) -> Result<FlowTrace, FlowError> {
    cfg.validate()?;
    check_point(v.n, p0)?;
    if !inside(p0, bbox) {
        return Err(FlowError::LeftBox { start: p0.to_vec() });
    }
    let d = p0.len();
    let steps = step_count(cfg);
    let mut states = run(v, p0, cfg.s_max, steps, bbox)?;
    let fine = run(v, p0, cfg.s_max, 2 * steps, bbox)?;
    // compare at the last time both runs reached inside the box
    let common = (states.len() - 1).min((fine.len() - 1) / 2);
    let (a, b) = (&states[common], &fine[2 * common]);
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max);
    if diff > cfg.tolerance {
        return Err(FlowError::StepHalving {
            diff,
            tol: cfg.tolerance,
        });
    }
    let h = if steps == 0 { 0.0 } else { cfg.s_max / steps as f64 };
    let left_box_at = (states.len() <= steps).then_some(states.len() as f64 * h);
    states.truncate(common + 1);
    let mut samples = Vec::with_capacity(states.len());
    for (i, y) in states.iter().enumerate() {
        let point = y[..d].to_vec();
        let jacobian: Vec<Vec<f64>> = (0..d).map(|r| y[d + r * d..d + (r + 1) * d].to_vec()).collect();
        let frame = horizontal_frame_matrix(&jacobian, p0);
        let (lambda, contact_residual) = contact_data(&jacobian, p0, &point);
        let k_meas = distortion(&frame)?;
        samples.push(FlowSample {
            s: i as f64 * h,
            point,
            jacobian,
            frame,
            k_meas,
            lambda,
            contact_residual,
        });
    }
    Ok(FlowTrace {
        start: p0.to_vec(),
        samples,
        left_box_at,
    })
}

/// `3^(2n+1)` start points on the middle half of the box.
pub fn default_kr_grid(bbox: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = bbox
        .iter()
        .map(|&(lo, hi)| {
            let (c, r) = (0.5 * (lo + hi), 0.25 * (hi - lo));
            vec![c - r, c, c + r]
        })
        .collect();
    product_grid(&axes)
}

/// Integrates from every grid point and checks, at every sample, that the
/// contact defect is at most [`CONTACT_TOLERANCE`] and that the measured
/// distortion is at most `K(s)·(1 + tolerance)`.
pub fn kr_experiment(phi: &KRPotential, cfg: &FlowConfig) -> Result<(Report, Vec<FlowTrace>), FlowError> {
    cfg.validate()?;
    let v = kr_vector_field(phi);
    let grid = if cfg.grid.is_empty() {
        default_kr_grid(&phi.bbox)
    } else {
        cfg.grid.clone()
    };
    let traces: Vec<FlowTrace> = grid
        .par_iter()
        .map(|p| integrate_flow(&v, p, &phi.bbox, cfg))
        .collect::<Result<_, _>>()?;
    let mut rep = Report::new("kr_flow", &phi.vars);
    let mut min_margin = f64::INFINITY;
    for (i, tr) in traces.iter().enumerate() {
        let mut excess: f64 = 0.0;
        let mut defect: f64 = 0.0;
        for smp in &tr.samples {
            let bound = phi.bound(smp.s);
            excess = excess.max((smp.k_meas - bound) / bound);
            min_margin = min_margin.min(bound - smp.k_meas);
            defect = defect.max(smp.contact_residual);
        }
        rep.push(Residual::numeric(format!("start{i}/distortion"), excess.max(0.0), cfg.tolerance));
        rep.push(Residual::numeric(format!("start{i}/contact"), defect, CONTACT_TOLERANCE));
    }
    rep.note(format!(
        "phi = {}; |M|_HS = {} ({})",
        phi.phi.display(&phi.vars),
        phi.hs_norm(),
        if phi.m_exact {
            "exact: Z_jZ_k phi constant".to_string()
        } else {
            format!("grid estimate over the box, at most {SUP_GRID_MAX_POINTS} points")
        }
    ));
    rep.note(format!(
        "{} start points, step {:e}, s in [0, {}], minimum margin K(s) - K_meas = {:.6e}",
        traces.len(),
        cfg.step,
        cfg.s_max,
        min_margin
    ));
    let exits: Vec<String> = traces
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.left_box_at.map(|s| format!("start{i} at s = {s:.4}")))
        .collect();
    if !exits.is_empty() {
        rep.note(format!("trajectories stopped on leaving the box: {}", exits.join(", ")));
    }
    rep.note("local/empirical: distortion of the horizontal differential as a proxy for metric quasiconformality; polynomial potentials are not compactly supported");
    Ok((rep, traces))
}

/// CSV with columns `start, s, x1.., y1.., t, K_meas, K_bound,
/// contact_residual`; `start` indexes the trace.
pub fn write_traces_csv<W: Write>(traces: &[FlowTrace], phi: &KRPotential, out: W) -> Result<(), csv::Error> {
    let n = phi.n();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["start".to_string(), "s".to_string()];
    header.extend((1..=n).map(|j| format!("x{j}")));
    header.extend((1..=n).map(|j| format!("y{j}")));
    header.push("t".into());
    header.extend(["K_meas", "K_bound", "contact_residual"].map(String::from));
    w.write_record(&header)?;
    for (i, tr) in traces.iter().enumerate() {
        for smp in &tr.samples {
            let mut row = vec![i.to_string(), smp.s.to_string()];
            row.extend(smp.point.iter().map(f64::to_string));
            row.push(smp.k_meas.to_string());
            row.push(phi.bound(smp.s).to_string());
            row.push(smp.contact_residual.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_rational;
    use crate::maps::{corpus, full_jacobian, horizontal_jacobian, Corpus};

    fn potential(src: &str, n: usize) -> KRPotential {
        let vs = VarSet::new(n);
        KRPotential::new(parse_rational(src, &vs).unwrap(), &vs, vec![(-1.0, 1.0); 2 * n + 1]).unwrap()
    }

    fn short(s_max: f64) -> FlowConfig {
        FlowConfig {
            s_max,
            ..FlowConfig::default()
        }
    }

    #[test]
    fn vector_field_examples() {
        let vs = VarSet::new(1);
        let f = |s: &str| parse_rational(s, &vs).unwrap();
        assert_eq!(kr_vector_field(&potential("1", 1)).components, vec![f("0"), f("0"), f("1")]);
        // x1 T + ¼Y1 = ¼∂y + (x1 − ½x1)∂t
        assert_eq!(kr_vector_field(&potential("x1", 1)).components, vec![f("0"), f("1/4"), f("x1/2")]);
        // x1² T + (x1/2) Y1 = (x1/2)∂y
        assert_eq!(kr_vector_field(&potential("x1^2", 1)).components, vec![f("0"), f("x1/2"), f("0")]);
    }

    #[test]
    fn sup_norm_matrix() {
        let p = potential("x1^2", 1);
        assert!(p.m_exact);
        assert_eq!(p.m, vec![vec![0.5]]);
        let cubic = potential("x1^3", 1);
        assert!(!cubic.m_exact);
        // Z1Z1 x1³ = (3/2) x1, largest at the box corners
        assert!((cubic.m[0][0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn sup_grid_is_capped() {
        let p = potential("x1^3*y2", 2);
        assert!(!p.m_exact);
        let per_axis = (2..=SUP_GRID_PER_AXIS)
            .rev()
            .find(|k| k.pow(5) <= SUP_GRID_MAX_POINTS)
            .unwrap();
        assert!(per_axis >= 10);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(kr_bound(0.0, &[vec![0.5]], 1), 1.0);
        let s = 2f64.ln() / std::f64::consts::SQRT_2;
        assert!((kr_bound(s, &[vec![1.0]], 1) - (2.0 + 3f64.sqrt())).abs() < 1e-12);
        assert_eq!(kr_bound(5.0, &[vec![0.0]], 2), 1.0);
    }

    #[test]
    fn distortion_examples() {
        assert!((distortion(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap() - 1.0).abs() < 1e-15);
        assert!((distortion(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap() - 4.0).abs() < 1e-12);
        let (c, s) = (0.6, 0.8);
        let r = 3.0;
        let m = vec![vec![r * c, -r * s], vec![r * s, r * c]];
        assert!((distortion(&m).unwrap() - 1.0).abs() < 1e-10);
        assert!(matches!(distortion(&[vec![1.0, 2.0], vec![2.0, 4.0]]), Err(FlowError::Singular)));
    }

    #[test]
    fn conformal_frame_matrices_have_unit_distortion() {
        let inv = corpus(&Corpus::Inversion, 2).unwrap();
        let m = horizontal_jacobian(&inv);
        let p = [0.3, -0.4, 0.9, 0.2, 0.7];
        let mh: Vec<Vec<f64>> = (0..4)
            .map(|r| (0..4).map(|c| m.0.get(r, c).eval_real(&p).unwrap()).collect())
            .collect();
        assert!((distortion(&mh).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn frame_matrix_examples() {
        let p = [0.3, -0.2, 0.5];
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(horizontal_frame_matrix(&id, &p), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let dil = corpus(&Corpus::Dilation(Some(crate::algebra::Scalar::from_int(3))), 1).unwrap();
        let jf = full_jacobian(&dil);
        let j: Vec<Vec<f64>> = (0..3)
            .map(|r| (0..3).map(|c| jf.get(r, c).eval_real(&p).unwrap()).collect())
            .collect();
        assert_eq!(horizontal_frame_matrix(&j, &p), vec![vec![3.0, 0.0], vec![0.0, 3.0]]);
        let q: Vec<f64> = p.iter().zip([3.0, 3.0, 9.0]).map(|(a, b)| a * b).collect();
        let (lambda, defect) = contact_data(&j, &p, &q);
        assert!((lambda - 9.0).abs() < 1e-12 && defect < 1e-12);
    }

    #[test]
    fn vertical_flow_is_a_translation() {
        let p = potential("1", 1);
        let v = kr_vector_field(&p);
        let tr = integrate_flow(&v, &[0.1, 0.2, -0.5], &p.bbox, &short(1.0)).unwrap();
        let last = tr.samples.last().unwrap();
        assert!((last.point[2] - 0.5).abs() < 1e-12);
        assert!(tr.samples.iter().all(|s| (s.k_meas - 1.0).abs() < 1e-12));
        assert_eq!(last.frame, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn linear_potential_closed_form() {
        let p = potential("x1", 1);
        let v = kr_vector_field(&p);
        let tr = integrate_flow(&v, &[0.0, 0.0, 0.0], &p.bbox, &short(1.0)).unwrap();
        for smp in &tr.samples {
            let expect = [0.0, smp.s / 4.0, 0.0];
            assert!(smp.point.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-8));
        }
    }

    #[test]
    fn start_sample_is_the_identity() {
        let p = potential("x1^2", 1);
        let v = kr_vector_field(&p);
        let tr = integrate_flow(&v, &[0.2, 0.1, 0.3], &p.bbox, &short(0.5)).unwrap();
        let s0 = &tr.samples[0];
        assert_eq!(s0.s, 0.0);
        assert_eq!(s0.point, vec![0.2, 0.1, 0.3]);
        assert_eq!(s0.k_meas, 1.0);
        assert_eq!(s0.contact_residual, 0.0);
    }

    #[test]
    fn trajectories_stop_at_the_box() {
        let p = potential("x1^2", 1);
        let v = kr_vector_field(&p);
        // y grows at rate x/2 = 0.45 and reaches 1 at s = 2/9
        let tr = integrate_flow(&v, &[0.9, 0.9, 0.0], &p.bbox, &short(1.0)).unwrap();
        let exit = tr.left_box_at.unwrap();
        assert!((exit - 2.0 / 9.0).abs() < 2e-3, "{exit}");
        assert!(tr.samples.iter().all(|s| s.point[1] <= 1.0));
        let err = integrate_flow(&v, &[0.0, 0.0, 2.0], &p.bbox, &short(1.0)).unwrap_err();
        assert!(matches!(err, FlowError::LeftBox { .. }));
        let whole = integrate_flow(&v, &[0.2, 0.1, 0.0], &p.bbox, &short(1.0)).unwrap();
        assert_eq!(whole.left_box_at, None);
    }

    #[test]
    fn experiment_small() {
        let p = potential("x1^2", 1);
        let cfg = FlowConfig {
            step: 1e-2,
            ..FlowConfig::default()
        };
        let (rep, traces) = kr_experiment(&p, &cfg).unwrap();
        assert!(rep.passed(), "{rep}");
        assert_eq!(traces.len(), 27);
        let mut buf = Vec::new();
        write_traces_csv(&traces, &p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("start,s,x1,y1,t,K_meas,K_bound,contact_residual\n"));
        assert_eq!(text.lines().count(), 1 + 27 * 101);
    }

    #[test]
    fn rk4_is_fourth_order() {
        // φ = t²: V = xt∂x + yt∂y + t²∂t, nonlinear, t(s) = t0/(1 − t0 s)
        let p = potential("t^2", 1);
        let v = kr_vector_field(&p);
        let p0 = [0.2, 0.1, 0.5];
        let end = |steps| run(&v, &p0, 0.5, steps, &p.bbox).unwrap().pop().unwrap();
        let (a, b, c) = (end(5), end(10), end(20));
        let t_exact = 0.5 / (1.0 - 0.25);
        assert!((c[2] - t_exact).abs() < 1e-5);
        let order = ((a[1] - b[1]).abs() / (b[1] - c[1]).abs()).log2();
        assert!((order - 4.0).abs() < 0.3, "observed order {order}");
    }

    proptest::proptest! {
        #[test]
        fn bound_is_monotone_and_at_least_one(s in 0.0..2.0f64, ds in 0.0..1.0f64, m in 0.0..3.0f64, n in 1usize..4) {
            let mm = vec![vec![m; n]; n];
            let (k0, k1) = (kr_bound(s, &mm, n), kr_bound(s + ds, &mm, n));
            proptest::prop_assert!(k0 >= 1.0);
            proptest::prop_assert!(k1 >= k0);
        }
    }
}
