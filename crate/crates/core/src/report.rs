//! Rendering of run artifacts: JSON with fixed float precision, CSV tables
//! and Markdown summaries.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Number, Value};
use thiserror::Error;

use crate::calculus::BoundTrace;
use crate::certifier::CertificateReport;
use crate::exact::format_rational;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv encoding failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv buffer: {0}")]
    Buffer(String),
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.11e}", x).parse().unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits. Object
/// keys come out sorted, so equal inputs give identical bytes.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, ReportError> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// CSV with a header row.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Buffer(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReportError::Buffer(e.to_string()))
}

/// 12 significant digits, shortest round-trip form.
pub fn fmt_f64(x: f64) -> String {
    format!("{}", round_sig(x))
}

pub fn certificate_csv(rep: &CertificateReport) -> Result<String, ReportError> {
    let rows: Vec<Vec<String>> = rep
        .table
        .iter()
        .map(|row| {
            let o = &row.orbit;
            vec![
                row.step.to_string(),
                o.kind.clone(),
                o.plateau_id.clone().unwrap_or_default(),
                o.circle.as_ref().map(|c| format_rational(&c.s)).unwrap_or_default(),
                o.circle.as_ref().map(|c| c.l.to_string()).unwrap_or_default(),
                o.branch.map(|b| b.to_string()).unwrap_or_default(),
                o.c1.to_string(),
                o.index.to_string(),
                format_rational(row.action_value.rat()),
                format_rational(row.action_value.pi_coeff()),
                fmt_f64(row.action_approx),
                row.verdict.label().to_string(),
            ]
        })
        .collect();
    to_csv(
        &["step", "kind", "plateau", "s", "l", "branch", "c1", "index", "action_rat", "action_pi", "action_approx", "verdict"],
        &rows,
    )
}

pub fn certificate_markdown(rep: &CertificateReport) -> String {
    let mut md = String::new();
    let p = &rep.parameters;
    let _ = writeln!(md, "# Certificate: {}\n", rep.status);
    let _ = writeln!(md, "| parameter | value |\n|---|---|");
    let _ = writeln!(md, "| n | {} |", p.model.n);
    let _ = writeln!(md, "| λ | {} |", format_rational(&p.model.lambda));
    let _ = writeln!(md, "| N | {} |", p.model.chern_gen);
    let _ = writeln!(md, "| mode | {:?} |", p.model.mode);
    let _ = writeln!(md, "| r | {} |", format_rational(&p.r));
    let _ = writeln!(md, "| ε | {} |", format_rational(&p.epsilon));
    let _ = writeln!(md, "| E | {} |", p.energy);
    let _ = writeln!(md, "| τ | {} |", p.tau);
    let _ = writeln!(md, "| plateau | {} |", p.plateau);
    if let Some(m) = &rep.chosen_m {
        let _ = writeln!(md, "| m | {} ≈ {} |", m, fmt_f64(m.to_f64()));
    }
    md.push('\n');
    for line in &rep.logical_frame {
        let _ = writeln!(md, "- {line}");
    }
    if let Some(o) = &rep.offender {
        let _ = writeln!(
            md,
            "\n**Offender**: step {}, l = {}, c1 = {}, action {} ≈ {}",
            o.step,
            o.orbit.circle.as_ref().map_or(0, |c| c.l),
            o.orbit.c1,
            o.action_value,
            fmt_f64(o.action_approx)
        );
    }
    if !rep.violations.is_empty() {
        md.push_str("\n## Violations\n\n");
        for v in &rep.violations {
            let _ = writeln!(md, "- `{}`: {}", v.field, v.message);
        }
    }
    if !rep.table.is_empty() {
        md.push_str("\n## Index-n orbits\n\n| step | kind | l | c1 | action | verdict |\n|---|---|---|---|---|---|\n");
        for row in &rep.table {
            let l = row.orbit.circle.as_ref().map_or(String::from("-"), |c| c.l.to_string());
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                row.step,
                row.orbit.kind,
                l,
                row.orbit.c1,
                fmt_f64(row.action_approx),
                row.verdict.label()
            );
        }
    }
    md
}

pub fn trace_csv(trace: &BoundTrace) -> Result<String, ReportError> {
    let rows: Vec<Vec<String>> = trace
        .facts
        .iter()
        .map(|f| {
            vec![
                f.fact_id.to_string(),
                f.label.clone(),
                f.interval.to_string(),
                f.rule.name().to_string(),
                f.premises.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "),
            ]
        })
        .collect();
    to_csv(&["fact_id", "quantity", "interval", "rule", "premises"], &rows)
}

pub fn trace_markdown(trace: &BoundTrace) -> String {
    let mut md = String::from("| # | quantity | interval | rule | premises |\n|---|---|---|---|---|\n");
    for f in &trace.facts {
        let premises = f.premises.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(md, "| {} | {} | {} | {} | {} |", f.fact_id, f.label, f.interval, f.rule.name(), premises);
    }
    md
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1234567890123456), 0.123456789012);
        assert_eq!(round_sig(-2975.2066115702482), -2975.20661157);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(fmt_f64(1.0 / 3.0), "0.333333333333");
    }

    #[test]
    fn json_rounds_floats_but_not_integers() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: u64,
            c: String,
        }
        let out = to_json(&S { a: std::f64::consts::PI, b: 12345678901234, c: "1/3".into() }).unwrap();
        assert!(out.contains("3.14159265359"));
        assert!(out.contains("12345678901234"));
    }

    #[test]
    fn csv_has_header() {
        let s = to_csv(&["a", "b"], &[vec!["1".into(), "x,y".into()]]).unwrap();
        assert_eq!(s, "a,b\n1,\"x,y\"\n");
    }
}
