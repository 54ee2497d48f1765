//! Key/value map-spec files.
//!
//! ```text
//! # dilation by a formal factor r
//! name = dilation
//! n = 1
//! params = r
//! sample.r = 2
//! f1 = r*x1
//! f2 = r*y1
//! f3 = r^2*t
//! g1 = x1/r
//! g2 = y1/r
//! g3 = t/r^2
//! excluded = r = 0
//! ```
//!
//! `f1..f{2n+1}` are required; the inverse `g1..g{2n+1}` is all-or-nothing.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::{parse_rational, AlgebraError, RationalFn, VarSet};

use super::{ContactMap, MapError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("key `{key}`: {source}")]
    Expression { key: String, source: AlgebraError },
    #[error(transparent)]
    Map(#[from] MapError),
}

pub fn parse_map_spec(text: &str) -> Result<ContactMap, SpecError> {
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| SpecError::Syntax {
            line: i + 1,
            msg: "expected `key = value`".into(),
        })?;
        let key = k.trim().to_string();
        if kv.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
            return Err(SpecError::Syntax {
                line: i + 1,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }
    let get = |k: &str| kv.get(k).map(|(_, v)| v.as_str());
    let n_text = get("n").ok_or_else(|| SpecError::Missing("n".into()))?;
    let n: usize = match n_text.parse() {
        Ok(n) if n >= 1 => n,
        _ => {
            return Err(SpecError::Syntax {
                line: kv["n"].0,
                msg: format!("invalid dimension `{n_text}`"),
            })
        }
    };
    let params: Vec<String> = get("params")
        .map(|p| {
            p.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
        .unwrap_or_default();
    let vars = VarSet::with_params(n, &params);
    let expr = |key: &str| -> Result<Option<RationalFn>, SpecError> {
        get(key)
            .map(|src| {
                parse_rational(src, &vars).map_err(|source| SpecError::Expression {
                    key: key.to_string(),
                    source,
                })
            })
            .transpose()
    };
    let mut comps = Vec::with_capacity(2 * n + 1);
    for k in 1..=2 * n + 1 {
        let key = format!("f{k}");
        comps.push(expr(&key)?.ok_or(SpecError::Missing(key))?);
    }
    let mut inv = Vec::new();
    for k in 1..=2 * n + 1 {
        if let Some(g) = expr(&format!("g{k}"))? {
            inv.push(g);
        }
    }
    let name = get("name").unwrap_or("spec").to_string();
    let mut map = ContactMap::new(name, &vars, comps)?;
    match inv.len() {
        0 => {}
        m if m == 2 * n + 1 => map = map.with_inverse(inv)?,
        _ => {
            let missing = (1..=2 * n + 1)
                .map(|k| format!("g{k}"))
                .find(|k| get(k).is_none())
                .expect("some inverse component is absent");
            return Err(SpecError::Missing(missing));
        }
    }
    if let Some(e) = get("excluded") {
        map = map.with_exclusion(e);
    }
    for p in &params {
        if let Some(v) = expr(&format!("sample.{p}"))? {
            let c = v.constant_value().ok_or_else(|| SpecError::Syntax {
                line: kv[&format!("sample.{p}")].0,
                msg: "sample values must be constants".into(),
            })?;
            map = map.with_sample(p, c);
        }
    }
    for key in kv.keys() {
        let known = matches!(key.as_str(), "name" | "n" | "params" | "excluded")
            || key.strip_prefix("sample.").is_some_and(|p| params.iter().any(|q| q == p))
            || key
                .strip_prefix('f')
                .or_else(|| key.strip_prefix('g'))
                .and_then(|d| d.parse::<usize>().ok())
                .is_some_and(|k| (1..=2 * n + 1).contains(&k));
        if !known {
            return Err(SpecError::Syntax {
                line: kv[key].0,
                msg: format!("unknown key `{key}`"),
            });
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::super::{check_map, PositivityGrid};
    use super::*;

    const DILATION: &str = "\
# dilation by a formal factor
name = dilation
n = 1
params = r
sample.r = 2
f1 = r*x1
f2 = r*y1
f3 = r^2*t
g1 = x1/r
g2 = y1/r
g3 = t/r^2
excluded = r = 0
";

    #[test]
    fn dilation_spec_passes() {
        let m = parse_map_spec(DILATION).unwrap();
        assert_eq!(m.name, "dilation");
        assert_eq!(m.excluded(), Some("r = 0"));
        assert!(check_map(&m, &PositivityGrid::default()).passed());
    }

    #[test]
    fn broken_vertical_component_fails() {
        let m = parse_map_spec(&DILATION.replace("f3 = r^2*t", "f3 = r^3*t")).unwrap();
        assert!(!check_map(&m, &PositivityGrid::default()).passed());
    }

    #[test]
    fn errors() {
        let missing = DILATION.replace("f2 = r*y1\n", "");
        assert_eq!(parse_map_spec(&missing).unwrap_err(), SpecError::Missing("f2".into()));
        let partial_inverse = DILATION.replace("g3 = t/r^2\n", "");
        assert_eq!(parse_map_spec(&partial_inverse).unwrap_err(), SpecError::Missing("g3".into()));
        assert!(matches!(parse_map_spec("n = 1\nf1 = x1^^\n"), Err(SpecError::Expression { .. })));
        assert!(matches!(parse_map_spec("n = one\n"), Err(SpecError::Syntax { line: 1, .. })));
        assert!(matches!(parse_map_spec("n = 1\njunk\n"), Err(SpecError::Syntax { line: 2, .. })));
        let extra = format!("{DILATION}f4 = x1\n");
        assert!(matches!(parse_map_spec(&extra), Err(SpecError::Syntax { .. })));
    }
}
