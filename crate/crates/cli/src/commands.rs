//! One function per subcommand. Each validates its arguments (usage errors
//! exit 2), runs the library checks and returns an [`Outcome`] for
//! rendering; nothing here prints.

use std::path::Path;

use heis_core::algebra::{parse_rational, Scalar, VarSet};
use heis_core::flows::{
    default_kr_grid, default_sample_points, kr_experiment, rivf_check, write_traces_csv, FlowConfig, FlowError,
    KRPotential, CONTACT_TOLERANCE, SUP_GRID_PER_AXIS,
};
use heis_core::group::LieVector;
use heis_core::maps::{
    corpus, cr_check, is_conformal, lambda_nu_check, parse_map_spec, ContactMap, Corpus, PositivityGrid,
    CORPUS_NAMES,
};
use heis_core::replay::{commutation_suite, factorization_identity, operator_identities, replay_all, ReplayError};
use heis_core::report::Report;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug)]
pub enum CliError {
    /// Malformed arguments or input files; exit 2.
    Usage(String),
    /// A check could not be carried out to a verdict; exit 1.
    Failed(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Everything a report needs: the command, the effective configuration
/// (defaults included) and the check reports in a fixed order.
#[derive(Debug)]
pub struct Outcome {
    pub command: &'static str,
    pub config: Vec<(&'static str, String)>,
    pub reports: Vec<Report>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(Report::passed)
    }
}

fn check_n(n: usize) -> Result<(), CliError> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("n must be 1, 2 or 3, got {n}")))
    }
}

fn positivity(points_per_axis: usize) -> Result<PositivityGrid, CliError> {
    if points_per_axis == 0 {
        return Err(CliError::Usage("--grid must be at least 1".into()));
    }
    Ok(PositivityGrid {
        points_per_axis,
        ..PositivityGrid::default()
    })
}

fn parse_point(s: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let p: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("point `{s}`: {e}")))?;
    if p.len() != 2 * n + 1 || p.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!("point `{s}` needs {} finite coordinates", 2 * n + 1)));
    }
    Ok(p)
}

/// A corpus name (`dilation:r=2`) or the path of a map-spec file.
fn load_map(arg: &str, n: usize) -> Result<ContactMap, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{arg}: {e}")))?;
        return parse_map_spec(&text).map_err(|e| usage(format!("{arg}: {e}")));
    }
    let which: Corpus = arg.parse().map_err(|_| {
        usage(format!(
            "`{arg}` is neither a spec file nor a corpus map ({})",
            CORPUS_NAMES.join(", ")
        ))
    })?;
    corpus(&which, n).map_err(usage)
}

fn parse_generator(w: &str, n: usize) -> Result<LieVector<Scalar>, CliError> {
    let index = |rest: &str| -> Option<usize> { rest.parse().ok().filter(|j| (1..=n).contains(j)) };
    let bad = || CliError::Usage(format!("--w `{w}`: expected X1..X{n}, Y1..Y{n} or T"));
    match w.split_at(1) {
        ("T", "") => Ok(LieVector::t(n)),
        ("X", j) => Ok(LieVector::x(n, index(j).ok_or_else(bad)?)),
        ("Y", j) => Ok(LieVector::y(n, index(j).ok_or_else(bad)?)),
        _ => Err(bad()),
    }
}

pub fn identities(n: usize) -> Result<Outcome, CliError> {
    check_n(n)?;
    Ok(Outcome {
        command: "identities",
        config: vec![("n", n.to_string())],
        reports: vec![commutation_suite(n), operator_identities(n), factorization_identity(n)],
        notes: vec!["exact canonical-form equality; residuals are lhs - rhs".into()],
    })
}

pub fn check_map(n: usize, spec: Option<&Path>, map: Option<&str>, grid: usize) -> Result<Outcome, CliError> {
    let f = match (spec, map) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            parse_map_spec(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => {
            check_n(n)?;
            load_map(name, n)?
        }
        (None, None) => return Err(CliError::Usage("check-map needs a spec file or --map".into())),
    };
    let pg = positivity(grid)?;
    let mut notes = Vec::new();
    if let Some(ex) = f.excluded() {
        notes.push(format!("excluded set: {ex}"));
    }
    for (name, v) in f.samples() {
        notes.push(format!("sample {name} = {v}"));
    }
    Ok(Outcome {
        command: "check-map",
        config: vec![
            ("map", f.name.clone()),
            ("n", f.n().to_string()),
            ("positivity_grid", format!("{}^{} on [-{h},{h}]", pg.points_per_axis, 2 * f.n() + 1, h = pg.half_width)),
        ],
        reports: vec![is_conformal(&f, &pg), cr_check(&f), lambda_nu_check(&f)],
        notes,
    })
}

pub fn replay(n: usize, maps: &[String], grid: usize) -> Result<Outcome, CliError> {
    check_n(n)?;
    let selected: Vec<Corpus> = if maps.is_empty() {
        Corpus::standard()
    } else {
        maps.iter()
            .map(|m| m.parse::<Corpus>().map_err(usage))
            .collect::<Result<_, _>>()?
    };
    let pg = positivity(grid)?;
    let bundle = replay_all(n, &selected, &pg).map_err(|e| match e {
        ReplayError::Dimension(_) => usage(e),
        other => CliError::Failed(other.to_string()),
    })?;
    let names: Vec<&str> = selected.iter().map(Corpus::name).collect();
    Ok(Outcome {
        command: "replay",
        config: vec![
            ("n", n.to_string()),
            ("maps", names.join(",")),
            ("positivity_grid", format!("{}^{} on [-{h},{h}]", pg.points_per_axis, 2 * n + 1, h = pg.half_width)),
        ],
        reports: bundle.reports,
        notes: bundle.notes,
    })
}

fn flow_error(e: FlowError) -> CliError {
    match e {
        FlowError::Config(_) | FlowError::Dimension { .. } | FlowError::NoInverse(_) => usage(e),
        other => CliError::Failed(other.to_string()),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn flow(
    n: usize,
    phi: &str,
    bbox: &str,
    smax: f64,
    step: f64,
    tol: f64,
    points: &[String],
    csv: Option<&Path>,
) -> Result<Outcome, CliError> {
    check_n(n)?;
    let vars = VarSet::new(n);
    let phi_fn = parse_rational(phi, &vars).map_err(|e| usage(format!("--phi `{phi}`: {e}")))?;
    let (lo, hi) = bbox
        .split_once(',')
        .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)))
        .filter(|(a, b)| a.is_finite() && b.is_finite() && a < b)
        .ok_or_else(|| usage(format!("--box `{bbox}`: expected `lo,hi` with lo < hi")))?;
    let grid = points.iter().map(|p| parse_point(p, n)).collect::<Result<Vec<_>, _>>()?;
    let cfg = FlowConfig {
        step,
        s_max: smax,
        tolerance: tol,
        grid,
        ..FlowConfig::default()
    };
    cfg.validate().map_err(flow_error)?;
    let potential = KRPotential::new(phi_fn, &vars, vec![(lo, hi); 2 * n + 1]).map_err(flow_error)?;
    let starts = if cfg.grid.is_empty() {
        default_kr_grid(&potential.bbox).len()
    } else {
        cfg.grid.len()
    };
    let (report, traces) = kr_experiment(&potential, &cfg).map_err(flow_error)?;
    if let Some(path) = csv {
        let file = std::fs::File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        write_traces_csv(&traces, &potential, std::io::BufWriter::new(file))
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    Ok(Outcome {
        command: "flow",
        config: vec![
            ("n", n.to_string()),
            ("phi", phi.to_string()),
            ("box", format!("[{lo},{hi}]^{}", 2 * n + 1)),
            ("smax", smax.to_string()),
            ("step", format!("{step:e}")),
            ("tol", format!("{tol:e}")),
            ("contact_tol", format!("{CONTACT_TOLERANCE:e}")),
            ("starts", starts.to_string()),
            ("sup_grid_per_axis", SUP_GRID_PER_AXIS.to_string()),
        ],
        reports: vec![report],
        notes: Vec::new(),
    })
}

pub fn rivf(
    n: usize,
    map: &str,
    w: &str,
    points: &[String],
    seed: Option<u64>,
    tol: f64,
    fd_step: f64,
) -> Result<Outcome, CliError> {
    check_n(n)?;
    let f = load_map(map, n)?;
    let n = f.n();
    let gen = parse_generator(w, n)?;
    let pts: Vec<Vec<f64>> = match (points.is_empty(), seed) {
        (false, _) => points.iter().map(|p| parse_point(p, n)).collect::<Result<_, _>>()?,
        (true, Some(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..3)
                .map(|_| (0..2 * n + 1).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect()
        }
        (true, None) => default_sample_points(n),
    };
    let cfg = FlowConfig {
        fd_step,
        tolerance: tol,
        ..FlowConfig::default()
    };
    let reports = pts
        .iter()
        .map(|p| rivf_check(&f, &gen, p, &cfg).map_err(flow_error))
        .collect::<Result<Vec<_>, _>>()?;
    let mut config = vec![
        ("map", f.name.clone()),
        ("n", n.to_string()),
        ("w", w.to_string()),
        ("fd_step", format!("{fd_step:e}")),
        ("tol", format!("{tol:e}")),
        ("points", pts.len().to_string()),
    ];
    if let Some(s) = seed {
        config.push(("seed", s.to_string()));
    }
    Ok(Outcome {
        command: "rivf-check",
        config,
        reports,
        notes: Vec::new(),
    })
}
