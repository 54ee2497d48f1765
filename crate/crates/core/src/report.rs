//! Structured pass/fail results.
//!
//! A [`Report`] is one named check with a list of residuals. Symbolic
//! residuals pass when they are the zero rational function, numeric ones when
//! their magnitude is within tolerance, predicates when they hold.

use std::fmt;

use serde::Serialize;

use crate::algebra::{RationalFn, VarSet};
use crate::diffop::DiffOp;

/// Longest residual text kept in a digest before it is shortened.
pub const DIGEST_LIMIT: usize = 160;

#[derive(Clone, Debug, PartialEq)]
pub enum Residual {
    Symbolic { id: String, value: RationalFn },
    Operator { id: String, value: DiffOp },
    Numeric { id: String, magnitude: f64, tolerance: f64 },
    Predicate { id: String, holds: bool, detail: String },
}

impl Residual {
    pub fn symbolic(id: impl Into<String>, value: RationalFn) -> Self {
        Residual::Symbolic { id: id.into(), value }
    }

    /// Residual `lhs - rhs`.
    pub fn difference(id: impl Into<String>, lhs: &RationalFn, rhs: &RationalFn) -> Self {
        Residual::symbolic(id, lhs - rhs)
    }

    /// Operator residual `lhs - rhs`, passing when the canonical form is zero.
    pub fn operator(id: impl Into<String>, lhs: &DiffOp, rhs: &DiffOp) -> Self {
        Residual::Operator {
            id: id.into(),
            value: lhs.sub(rhs),
        }
    }

    pub fn numeric(id: impl Into<String>, magnitude: f64, tolerance: f64) -> Self {
        Residual::Numeric {
            id: id.into(),
            magnitude,
            tolerance,
        }
    }

    pub fn predicate(id: impl Into<String>, holds: bool, detail: impl Into<String>) -> Self {
        Residual::Predicate {
            id: id.into(),
            holds,
            detail: detail.into(),
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Residual::Symbolic { id, .. }
            | Residual::Operator { id, .. }
            | Residual::Numeric { id, .. }
            | Residual::Predicate { id, .. } => id,
        }
    }

    pub fn passed(&self) -> bool {
        match self {
            Residual::Symbolic { value, .. } => value.is_zero(),
            Residual::Operator { value, .. } => value.is_zero(),
            // NaN never passes
            Residual::Numeric { magnitude, tolerance, .. } => *magnitude <= *tolerance,
            Residual::Predicate { holds, .. } => *holds,
        }
    }

    /// Short human-readable summary of the residual value.
    pub fn digest(&self, vars: &VarSet) -> String {
        match self {
            Residual::Symbolic { value, .. } => {
                let s = value.display(vars).to_string();
                if s.chars().count() > DIGEST_LIMIT {
                    let (dn, dd) = value.degrees();
                    let cut: String = s.chars().take(DIGEST_LIMIT).collect();
                    format!("{cut}... (degrees {dn}/{dd})")
                } else {
                    s
                }
            }
            Residual::Operator { value, .. } => {
                let s = value.display(vars).to_string();
                if s.chars().count() > DIGEST_LIMIT {
                    let cut: String = s.chars().take(DIGEST_LIMIT).collect();
                    format!("{cut}... (order {})", value.order())
                } else {
                    s
                }
            }
            Residual::Numeric { magnitude, tolerance, .. } => format!("{magnitude:.3e} (tol {tolerance:.1e})"),
            Residual::Predicate { detail, .. } => detail.clone(),
        }
    }
}

/// One check: a name, its context and the residuals it produced.
#[derive(Clone, Debug)]
pub struct Report {
    pub check: String,
    pub n: usize,
    pub map: Option<String>,
    pub vars: VarSet,
    pub residuals: Vec<Residual>,
    pub notes: Vec<String>,
}

/// Flat serializable form of one residual line.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Record {
    pub check: String,
    pub id: String,
    pub n: usize,
    pub map: Option<String>,
    pub verdict: &'static str,
    pub residual: String,
}

impl Report {
    pub fn new(check: impl Into<String>, vars: &VarSet) -> Self {
        Report {
            check: check.into(),
            n: vars.n(),
            map: None,
            vars: vars.clone(),
            residuals: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn for_map(mut self, name: impl Into<String>) -> Self {
        self.map = Some(name.into());
        self
    }

    pub fn push(&mut self, r: Residual) {
        self.residuals.push(r);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Appends all residuals and notes of `other`, prefixing ids with its
    /// check name.
    pub fn absorb(&mut self, other: Report) {
        for mut r in other.residuals {
            let prefixed = format!("{}/{}", other.check, r.id());
            match &mut r {
                Residual::Symbolic { id, .. }
                | Residual::Operator { id, .. }
                | Residual::Numeric { id, .. }
                | Residual::Predicate { id, .. } => *id = prefixed,
            }
            self.residuals.push(r);
        }
        self.notes.extend(other.notes);
    }

    /// Pass iff every residual passes. An empty report passes.
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(Residual::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| !r.passed())
    }

    pub fn records(&self) -> Vec<Record> {
        self.residuals
            .iter()
            .map(|r| Record {
                check: self.check.clone(),
                id: r.id().to_string(),
                n: self.n,
                map: self.map.clone(),
                verdict: if r.passed() { "pass" } else { "fail" },
                residual: r.digest(&self.vars),
            })
            .collect()
    }
}

impl fmt::Display for Report {
    /// One line per residual: `check id n=.. map=.. verdict residual`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let map = self.map.as_deref().unwrap_or("-");
        for rec in self.records() {
            writeln!(
                f,
                "{}\t{}\tn={}\tmap={}\t{}\t{}",
                rec.check, rec.id, rec.n, map, rec.verdict, rec.residual
            )?;
        }
        for note in &self.notes {
            writeln!(f, "# {}: {}", self.check, note)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_rational;

    #[test]
    fn verdict_follows_residuals() {
        let vs = VarSet::new(1);
        let mut r = Report::new("demo", &vs);
        assert!(r.passed());
        r.push(Residual::symbolic("zero", RationalFn::zero()));
        r.push(Residual::numeric("small", 1e-9, 1e-6));
        assert!(r.passed());
        r.push(Residual::symbolic("one", parse_rational("x1", &vs).unwrap()));
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
        assert!(!Residual::numeric("nan", f64::NAN, 1.0).passed());
    }

    #[test]
    fn text_lines() {
        let vs = VarSet::new(1);
        let mut r = Report::new("contact", &vs).for_map("shift");
        r.push(Residual::symbolic("X1", RationalFn::one()));
        let s = r.to_string();
        assert_eq!(s, "contact\tX1\tn=1\tmap=shift\tfail\t1\n");
    }

    #[test]
    fn absorb_prefixes_ids() {
        let vs = VarSet::new(1);
        let mut outer = Report::new("bundle", &vs);
        let mut inner = Report::new("inner", &vs);
        inner.push(Residual::predicate("p", true, "ok"));
        outer.absorb(inner);
        assert_eq!(outer.residuals[0].id(), "inner/p");
    }
}
