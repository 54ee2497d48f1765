//! Deterministic rendering of an [`Outcome`].

use serde_json::{json, Map, Value};

use crate::commands::Outcome;
use crate::Format;

pub fn render(o: &Outcome, format: Format) -> String {
    match format {
        Format::Text => text(o),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&document(o)).expect("serializable");
            s.push('\n');
            s
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// `#` header with every setting, then each report (records and notes),
/// and a final verdict line.
fn text(o: &Outcome) -> String {
    let mut s = format!("# heis {}\n", o.command);
    for (k, v) in &o.config {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    for note in &o.notes {
        s.push_str(&format!("# {note}\n"));
    }
    for r in &o.reports {
        s.push_str(&r.to_string());
    }
    let total: usize = o.reports.iter().map(|r| r.residuals.len()).sum();
    let failed: usize = o.reports.iter().map(|r| r.failures().count()).sum();
    s.push_str(&format!("# verdict: {} ({} checks, {} failed)\n", verdict(o.passed()), total, failed));
    s
}

fn document(o: &Outcome) -> Value {
    let config: Map<String, Value> = o.config.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let reports: Vec<Value> = o
        .reports
        .iter()
        .map(|r| {
            json!({
                "check": r.check,
                "map": r.map,
                "n": r.n,
                "verdict": verdict(r.passed()),
                "records": r.records(),
                "notes": r.notes,
            })
        })
        .collect();
    json!({
        "command": o.command,
        "config": config,
        "notes": o.notes,
        "reports": reports,
        "verdict": verdict(o.passed()),
    })
}
