//! Command dispatch and artifact emission.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{derive_theorem_bound, AuditFailure, BoundTrace, CalculusError, Rule};
use crate::certifier::{certify, probe_plateau, CertificateReport, CertificateStatus, CertifyError};
use crate::config::{Command, CoverPbSettings, Format, RunConfig};
use crate::cover::{
    build_partition_with_support, check_lower_bound, color_disjoint_families, intersection_graph, nu_c, nu_field,
    verify_families, BallCover, BoundStatus, CoverError, Cutoff, Domain, Grid, LowerBoundOptions, LowerBoundReport,
    NuOptions, NuReport,
};
use crate::exact::PiRational;
use crate::report::{self, fmt_f64, ReportError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_REFUTED: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// In-memory artifact; `name` is the file name inside the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub exit_code: i32,
    /// One line for standard error.
    pub summary: String,
    pub artifacts: Vec<Artifact>,
    /// Files written; empty when the report went to standard output.
    pub written: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverAnalysis {
    pub cover_id: Option<String>,
    pub domain: Domain,
    pub balls: usize,
    pub max_radius: f64,
    pub d: usize,
    pub degrees: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub families: Vec<Vec<usize>>,
    pub family_count: usize,
    pub families_disjoint: bool,
    pub within_d_plus_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverPbReport {
    pub cover_id: Option<String>,
    pub balls: usize,
    pub cutoff: Cutoff,
    pub support_scale: f64,
    /// Largest `|Σ f_i - 1|` over the grid.
    pub identity_defect: f64,
    pub min_value: f64,
    pub nu: NuReport,
    pub bound: LowerBoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub final_interval: String,
    pub lower: Option<PiRational>,
    pub upper: Option<PiRational>,
    pub upper_approx: Option<f64>,
    pub audit_passed: bool,
    pub audit_failures: Vec<AuditFailure>,
    /// The nonnegativity sub-derivation feeds the final fact.
    pub lemma_present: bool,
    pub trace: BoundTrace,
}

struct Rendered {
    exit_code: i32,
    summary: String,
    json: String,
    csv: Option<String>,
    md: String,
    extra: Vec<Artifact>,
}

fn certificate_rendered(rep: &CertificateReport, status: &CertificateStatus) -> Result<Rendered, RunError> {
    let exit_code = match status {
        CertificateStatus::Certified => EXIT_OK,
        CertificateStatus::Refuted(_) => EXIT_REFUTED,
        CertificateStatus::InvalidInput(_) => EXIT_INVALID,
    };
    let mut summary = format!("{} ({} index-n rows)", rep.status, rep.table.len());
    if let Some(o) = &rep.offender {
        let _ = write!(summary, "; offender at step {} with action {} ≈ {}", o.step, o.action_value, fmt_f64(o.action_approx));
    }
    Ok(Rendered {
        exit_code,
        summary,
        json: report::to_json(rep)?,
        csv: Some(report::certificate_csv(rep)?),
        md: report::certificate_markdown(rep),
        extra: Vec::new(),
    })
}

fn analyze_cover(cover: &BallCover) -> CoverAnalysis {
    let adj = intersection_graph(cover);
    let families = color_disjoint_families(cover);
    let d = adj.iter().map(Vec::len).max().unwrap_or(0);
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(i, nbrs)| nbrs.iter().filter(move |&&j| j > i).map(move |&j| [i, j]))
        .collect();
    CoverAnalysis {
        cover_id: cover.id.clone(),
        domain: cover.domain,
        balls: cover.len(),
        max_radius: cover.max_radius(),
        d,
        degrees: adj.iter().map(Vec::len).collect(),
        edges,
        family_count: families.len(),
        families_disjoint: verify_families(cover, &families).is_empty(),
        within_d_plus_one: families.len() <= d + 1,
        families,
    }
}

fn cover_analysis_rendered(cover: &BallCover) -> Result<Rendered, RunError> {
    let a = analyze_cover(cover);
    let mut family_of = vec![0usize; a.balls];
    for (f, members) in a.families.iter().enumerate() {
        for &i in members {
            family_of[i] = f;
        }
    }
    let rows: Vec<Vec<String>> = cover
        .balls
        .iter()
        .enumerate()
        .map(|(i, b)| {
            vec![i.to_string(), fmt_f64(b.c[0]), fmt_f64(b.c[1]), fmt_f64(b.r), a.degrees[i].to_string(), family_of[i].to_string()]
        })
        .collect();
    let csv = report::to_csv(&["ball", "x", "y", "r", "degree", "family"], &rows)?;
    let mut md = String::from("# Cover analysis\n\n| quantity | value |\n|---|---|\n");
    let _ = writeln!(md, "| balls | {} |", a.balls);
    let _ = writeln!(md, "| max radius | {} |", fmt_f64(a.max_radius));
    let _ = writeln!(md, "| d | {} |", a.d);
    let _ = writeln!(md, "| edges | {} |", a.edges.len());
    let _ = writeln!(md, "| families | {} |", a.family_count);
    let _ = writeln!(md, "| families disjoint | {} |", a.families_disjoint);
    let _ = writeln!(md, "| at most d + 1 families | {} |", a.within_d_plus_one);
    let ok = a.families_disjoint && a.within_d_plus_one;
    Ok(Rendered {
        exit_code: if ok { EXIT_OK } else { EXIT_INTERNAL },
        summary: format!("d = {}, {} families, disjoint = {}", a.d, a.family_count, a.families_disjoint),
        json: report::to_json(&a)?,
        csv: Some(csv),
        md,
        extra: Vec::new(),
    })
}

fn cover_pb_rendered(s: &CoverPbSettings, seed: u64, with_field: bool) -> Result<Rendered, RunError> {
    let grid = Grid { n: s.grid };
    let pou = build_partition_with_support(&s.cover, s.cutoff, grid, s.support_scale)?;
    let opts = NuOptions { exact_cap: s.exact_cap, seed };
    let nu = nu_c(&pou, &opts);
    let bound = check_lower_bound(
        &pou,
        &s.cover,
        &nu,
        &LowerBoundOptions { grid_slack: s.grid_slack, energy_asserted: s.energy_asserted },
    )?;
    let (identity_defect, min_value) = pou.identity_defect();
    let rep = CoverPbReport {
        cover_id: s.cover.id.clone(),
        balls: s.cover.len(),
        cutoff: s.cutoff,
        support_scale: s.support_scale,
        identity_defect,
        min_value,
        nu,
        bound,
    };
    let b = &rep.bound;
    let status = match b.status {
        BoundStatus::Pass => "PASS",
        BoundStatus::Fail => "FAIL",
        BoundStatus::Skipped => "SKIPPED",
    };
    let exit_code = match b.status {
        BoundStatus::Pass => EXIT_OK,
        BoundStatus::Fail => EXIT_REFUTED,
        BoundStatus::Skipped => EXIT_INVALID,
    };
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let csv = report::to_csv(
        &["status", "d", "r_max", "grid", "nu_c", "bound", "ratio", "exact", "max_active", "identity_defect"],
        &[vec![
            status.to_string(),
            b.d.to_string(),
            fmt_f64(b.r_max),
            b.grid.to_string(),
            fmt_f64(b.nu_c),
            opt(b.bound),
            opt(b.ratio),
            b.exact.to_string(),
            rep.nu.max_active.to_string(),
            fmt_f64(rep.identity_defect),
        ]],
    )?;
    let mut md = format!("# Poisson-bracket bound: {status}\n\n| quantity | value |\n|---|---|\n");
    let _ = writeln!(md, "| balls | {} |", rep.balls);
    let _ = writeln!(md, "| d | {} |", b.d);
    let _ = writeln!(md, "| r (max) | {} |", fmt_f64(b.r_max));
    let _ = writeln!(md, "| grid | {0}×{0} |", b.grid);
    let _ = writeln!(md, "| ν_c | {} |", fmt_f64(b.nu_c));
    let _ = writeln!(md, "| argmax | ({}, {}) |", fmt_f64(rep.nu.argmax[0]), fmt_f64(rep.nu.argmax[1]));
    let _ = writeln!(md, "| 1/(2d²πr²) | {} |", opt(b.bound));
    let _ = writeln!(md, "| ratio | {} |", opt(b.ratio));
    let _ = writeln!(md, "| exact | {} (cap {}) |", b.exact, rep.nu.exact_cap);
    let _ = writeln!(md, "| subordinate | {} |", b.subordinate);
    let _ = writeln!(md, "| energy asserted | {} |", b.energy_asserted);
    let _ = writeln!(md, "| seed | {} |", rep.nu.seed);
    if let Some(reason) = &b.skip_reason {
        let _ = writeln!(md, "\nSkipped: {reason}");
    }
    let mut extra = Vec::new();
    if with_field {
        let field = nu_field(&pou, &opts);
        let rows: Vec<Vec<String>> = field
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let (i, j) = pou.grid.unflatten(k);
                let z = pou.grid_point(k);
                vec![i.to_string(), j.to_string(), fmt_f64(z[0]), fmt_f64(z[1]), fmt_f64(*v)]
            })
            .collect();
        extra.push(Artifact { name: "cover-pb-field.csv".into(), contents: report::to_csv(&["i", "j", "x", "y", "norm"], &rows)? });
    }
    let summary = match (b.bound, b.ratio) {
        (Some(bound), Some(ratio)) => {
            format!("{status}: ν_c = {}, bound = {}, ratio = {}", fmt_f64(b.nu_c), fmt_f64(bound), fmt_f64(ratio))
        }
        _ => format!("{status}: {}", b.skip_reason.clone().unwrap_or_default()),
    };
    Ok(Rendered { exit_code, summary, json: report::to_json(&rep)?, csv: Some(csv), md, extra })
}

/// Runs the derivation and packages the result.
pub fn bound_report(trace: BoundTrace) -> BoundReport {
    let audit_failures = trace.audit();
    let last = trace.last().cloned();
    let lemma_present = last.as_ref().is_some_and(|f| {
        trace
            .ancestors(f.fact_id)
            .iter()
            .any(|id| trace.fact(*id).is_ok_and(|p| matches!(p.rule, Rule::Nonnegativity { .. })))
    });
    let interval = last.map(|f| f.interval);
    BoundReport {
        final_interval: interval.as_ref().map(ToString::to_string).unwrap_or_default(),
        lower: interval.as_ref().and_then(|i| i.lo_const().cloned()),
        upper: interval.as_ref().and_then(|i| i.hi_const().cloned()),
        upper_approx: interval.as_ref().and_then(|i| i.hi_const().map(|h| report::round_sig(h.to_f64()))),
        audit_passed: audit_failures.is_empty(),
        audit_failures,
        lemma_present,
        trace,
    }
}

fn bound_rendered(cmd: &Command) -> Result<Rendered, RunError> {
    let Command::BoundPropagate { model, balls } = cmd else { unreachable!("dispatch") };
    let trace = match derive_theorem_bound(balls, model) {
        Ok(t) => t,
        Err(CalculusError::Preconditions(v)) => {
            let msg = v.iter().map(|b| format!("ball {}: {}", b.ball, b.message)).collect::<Vec<_>>().join("; ");
            return Ok(Rendered {
                exit_code: EXIT_INVALID,
                summary: format!("INVALID_INPUT: {msg}"),
                json: report::to_json(&serde_json::json!({ "status": "INVALID_INPUT", "violations": v }))?,
                csv: None,
                md: format!("# Bound propagation: INVALID_INPUT\n\n{msg}\n"),
                extra: Vec::new(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let rep = bound_report(trace);
    let mut md = format!("# Bound propagation\n\nFinal: `c(H) ∈ {}`\n\n", rep.final_interval);
    let _ = writeln!(md, "Audit: {}. Nonnegativity sub-derivation present: {}.\n", if rep.audit_passed { "passed" } else { "FAILED" }, rep.lemma_present);
    md.push_str(&report::trace_markdown(&rep.trace));
    let ok = rep.audit_passed && rep.lemma_present;
    Ok(Rendered {
        exit_code: if ok { EXIT_OK } else { EXIT_INTERNAL },
        summary: format!("c(H) ∈ {}, audit {}", rep.final_interval, if rep.audit_passed { "passed" } else { "failed" }),
        json: report::to_json(&rep)?,
        csv: Some(report::trace_csv(&rep.trace)?),
        md,
        extra: Vec::new(),
    })
}

fn render(config: &RunConfig) -> Result<Rendered, RunError> {
    let with_field = config.output.dir.is_some();
    match &config.command {
        Command::KillerCertify(input) => {
            let cert = certify(input)?;
            certificate_rendered(&cert.to_report(), &cert.status)
        }
        Command::KillerProbe { input, a } => {
            let cert = probe_plateau(input, a)?;
            certificate_rendered(&cert.to_report(), &cert.status)
        }
        Command::CoverAnalyze { cover } => cover_analysis_rendered(cover),
        Command::CoverPb(s) => cover_pb_rendered(s, config.seed, with_field && s.write_field),
        cmd @ Command::BoundPropagate { .. } => bound_rendered(cmd),
    }
}

/// Computes all artifacts without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let name = config.command.name();
    let r = match render(config) {
        Ok(r) => r,
        Err(RunError::Cover(e @ (CoverError::NotACover { .. } | CoverError::GridTooSmall { .. }))) => Rendered {
            exit_code: EXIT_INVALID,
            summary: format!("INVALID_INPUT: {e}"),
            json: report::to_json(&serde_json::json!({ "status": "INVALID_INPUT", "error": e.to_string() }))?,
            csv: None,
            md: format!("# {name}: INVALID_INPUT\n\n{e}\n"),
            extra: Vec::new(),
        },
        Err(e) => return Err(e),
    };
    let mut artifacts = Vec::new();
    for f in &config.output.formats {
        let contents = match f {
            Format::Json => Some(r.json.clone()),
            Format::Csv => r.csv.clone(),
            Format::Md => Some(r.md.clone()),
        };
        if let Some(contents) = contents {
            artifacts.push(Artifact { name: format!("{name}.{}", f.extension()), contents });
        }
    }
    artifacts.extend(r.extra);
    Ok(RunOutcome { exit_code: r.exit_code, summary: format!("{name}: {}", r.summary), artifacts, written: Vec::new() })
}

/// Executes and writes artifacts into the output directory, or the JSON
/// report to standard output when no directory is configured.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let mut outcome = execute(config)?;
    match &config.output.dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.clone(), source })?;
            for a in &outcome.artifacts {
                let path = dir.join(&a.name);
                std::fs::write(&path, &a.contents).map_err(|source| RunError::Io { path: path.clone(), source })?;
                outcome.written.push(path);
            }
        }
        None => {
            if let Some(a) = outcome.artifacts.iter().find(|a| a.name.ends_with(".json")) {
                print!("{}", a.contents);
            }
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;
    use std::path::Path;

    fn cfg(text: &str) -> RunConfig {
        parse_config_str(text, Path::new("")).unwrap()
    }

    #[test]
    fn certify_scenario_exits_zero() {
        let out = execute(&cfg(r#"{"killer-certify": {"n": 1, "lambda": -1, "r": 0.35, "epsilon": 0.05, "E": 0.4}}"#)).unwrap();
        assert_eq!(out.exit_code, EXIT_OK, "{}", out.summary);
        assert_eq!(out.artifacts.len(), 1);
        assert!(out.artifacts[0].contents.contains("\"CERTIFIED\""));
    }

    #[test]
    fn probe_exits_two() {
        let out = execute(&cfg(
            r#"{"killer-probe": {"n": 1, "lambda": -1, "r": 0.35, "epsilon": 0.05, "E": 0.4, "a": -0.1},
               "output": {"formats": ["json", "csv", "md"]}}"#,
        ))
        .unwrap();
        assert_eq!(out.exit_code, EXIT_REFUTED);
        assert_eq!(out.artifacts.len(), 3);
        assert!(out.summary.contains("offender"));
    }

    #[test]
    fn bound_propagate_report() {
        let out = execute(&cfg(r#"{"bound-propagate": {"n": 1, "lambda": -1, "balls": [{"r": 0.2}, {"r": 0.3}, {"r": 0.25}]}}"#)).unwrap();
        assert_eq!(out.exit_code, EXIT_OK, "{}", out.summary);
        let rep: BoundReport = serde_json::from_str(&out.artifacts[0].contents).unwrap();
        assert!(rep.audit_passed && rep.lemma_present);
        assert_eq!(rep.upper.unwrap(), PiRational::pi_multiple(crate::exact::parse_rational("0.09").unwrap()));
    }

    #[test]
    fn oversized_support_is_skipped() {
        let out = execute(&cfg(r#"{"cover-pb": {"torus_grid": {"k": 3}, "grid": 24, "support_scale": 1.5}}"#)).unwrap();
        assert_eq!(out.exit_code, EXIT_INVALID);
        assert!(out.summary.contains("SKIPPED"));
    }

    #[test]
    fn gap_in_cover_is_invalid_input() {
        let out = execute(&cfg(
            r#"{"cover-pb": {"cover": {"domain": {"rect": [0, 0, 2, 1]}, "balls": [{"c": [0.25, 0.5], "r": 0.5}, {"c": [1.75, 0.5], "r": 0.5}]}, "grid": 9}}"#,
        ))
        .unwrap();
        assert_eq!(out.exit_code, EXIT_INVALID);
    }
}
