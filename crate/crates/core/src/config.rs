//! Run configuration: one command block plus optional `output` and `seed`.
//!
//! ```json
//! {
//!   "killer-certify": {"n": 1, "lambda": -1, "r": 0.35, "epsilon": 0.05, "E": 0.4},
//!   "output": {"dir": "out", "formats": ["json", "md"]},
//!   "seed": 7
//! }
//! ```
//!
//! Exact fields accept JSON numbers or strings; the literal text is parsed,
//! so `0.35` means `7/20`. Fields holding multiples of π also accept
//! `"0.09pi"`. Problems are collected and reported together with their
//! field paths.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::calculus::{check_balls, BallSpec};
use crate::certifier::{check_preconditions, CertificationInput};
use crate::cover::{BallCover, Cutoff, DEFAULT_EXACT_CAP};
use crate::exact::{parse_rational, PiRational};
use crate::floer::{ManifoldMode, ManifoldModel};

pub const COMMANDS: [&str; 5] = ["killer-certify", "killer-probe", "cover-analyze", "cover-pb", "bound-propagate"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: not valid JSON: {message}")]
    Json { path: PathBuf, message: String },
    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Md,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Md => "md",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Md),
            other => Err(format!("unknown format `{other}` (expected json, csv or md)")),
        }
    }
}

/// Parses a comma-separated format list.
pub fn parse_formats(list: &str) -> Result<Vec<Format>, String> {
    let mut out: Vec<Format> = list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err("empty format list".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    /// `None` writes the JSON report to standard output.
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, formats: vec![Format::Json] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverPbSettings {
    pub cover: BallCover,
    pub cutoff: Cutoff,
    pub grid: usize,
    pub support_scale: f64,
    pub exact_cap: usize,
    pub grid_slack: f64,
    pub energy_asserted: bool,
    /// Also write per-grid-point norms as CSV.
    pub write_field: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    KillerCertify(CertificationInput),
    KillerProbe { input: CertificationInput, a: PiRational },
    CoverAnalyze { cover: BallCover },
    CoverPb(CoverPbSettings),
    BoundPropagate { model: ManifoldModel, balls: Vec<BallSpec> },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::KillerCertify(_) => "killer-certify",
            Command::KillerProbe { .. } => "killer-probe",
            Command::CoverAnalyze { .. } => "cover-analyze",
            Command::CoverPb(_) => "cover-pb",
            Command::BoundPropagate { .. } => "bound-propagate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub output: OutputSpec,
    pub seed: u64,
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub probe: Option<String>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub exact_l_cap: Option<usize>,
}

/// `"a"`, `"b pi"`, `"bpi"`, `"b*pi"`, `"pi"` or `"b π"`.
pub fn parse_pi_literal(text: &str) -> Result<PiRational, String> {
    let s = text.trim();
    let stripped = s.strip_suffix("pi").or_else(|| s.strip_suffix('π'));
    match stripped {
        Some(coeff) => {
            let coeff = coeff.trim().trim_end_matches('*').trim();
            let c = match coeff {
                "" | "+" => BigRational::from_integer(1.into()),
                "-" => BigRational::from_integer((-1).into()),
                c => parse_rational(c).map_err(|e| e.to_string())?,
            };
            Ok(PiRational::pi_multiple(c))
        }
        None => parse_rational(s).map(PiRational::from_rational).map_err(|e| e.to_string()),
    }
}

struct Block<'a> {
    map: &'a Map<String, Value>,
    path: String,
    seen: BTreeSet<String>,
}

impl<'a> Block<'a> {
    fn new(value: &'a Value, path: &str, issues: &mut Vec<ConfigIssue>) -> Option<Self> {
        match value.as_object() {
            Some(map) => Some(Self { map, path: path.to_string(), seen: BTreeSet::new() }),
            None => {
                issues.push(ConfigIssue { path: path.into(), message: "expected an object".into() });
                None
            }
        }
    }

    fn at(&self, key: &str) -> String {
        format!("{}.{key}", self.path)
    }

    fn get(&mut self, key: &str) -> Option<&'a Value> {
        self.seen.insert(key.to_string());
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn issue(&self, issues: &mut Vec<ConfigIssue>, key: &str, message: impl Into<String>) {
        issues.push(ConfigIssue { path: self.at(key), message: message.into() });
    }

    fn literal(v: &Value) -> Option<String> {
        match v {
            Value::Number(n) => Some(n.to_string()),
            Value::String(s) => Some(s.clone()),
            _ => None,
        }
    }

    fn parsed<T>(
        &mut self,
        key: &str,
        required: bool,
        issues: &mut Vec<ConfigIssue>,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Option<T> {
        match self.get(key) {
            None => {
                if required {
                    self.issue(issues, key, "missing required field");
                }
                None
            }
            Some(v) => match Self::literal(v) {
                None => {
                    self.issue(issues, key, "expected a number or string");
                    None
                }
                Some(text) => match parse(&text) {
                    Ok(x) => Some(x),
                    Err(e) => {
                        self.issue(issues, key, e);
                        None
                    }
                },
            },
        }
    }

    fn rational(&mut self, key: &str, required: bool, issues: &mut Vec<ConfigIssue>) -> Option<BigRational> {
        self.parsed(key, required, issues, |t| parse_rational(t).map_err(|e| e.to_string()))
    }

    fn pi_rational(&mut self, key: &str, required: bool, issues: &mut Vec<ConfigIssue>) -> Option<PiRational> {
        self.parsed(key, required, issues, parse_pi_literal)
    }

    fn unsigned<T: FromStr>(&mut self, key: &str, required: bool, issues: &mut Vec<ConfigIssue>) -> Option<T> {
        self.parsed(key, required, issues, |t| t.parse::<T>().map_err(|_| format!("expected a nonnegative integer, got `{t}`")))
    }

    fn float(&mut self, key: &str, issues: &mut Vec<ConfigIssue>) -> Option<f64> {
        self.parsed(key, false, issues, |t| match t.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(format!("expected a finite number, got `{t}`")),
        })
    }

    fn boolean(&mut self, key: &str, issues: &mut Vec<ConfigIssue>) -> Option<bool> {
        match self.get(key) {
            None => None,
            Some(Value::Bool(b)) => Some(*b),
            Some(_) => {
                self.issue(issues, key, "expected true or false");
                None
            }
        }
    }

    fn string(&mut self, key: &str, issues: &mut Vec<ConfigIssue>) -> Option<String> {
        match self.get(key) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.issue(issues, key, "expected a string");
                None
            }
        }
    }

    fn finish(self, issues: &mut Vec<ConfigIssue>) {
        for key in self.map.keys() {
            if !self.seen.contains(key) {
                issues.push(ConfigIssue { path: self.at(key), message: "unknown field".into() });
            }
        }
    }
}

fn parse_model(b: &mut Block, issues: &mut Vec<ConfigIssue>) -> Option<ManifoldModel> {
    let mode = match b.string("mode", issues).as_deref() {
        None | Some("monotone") => ManifoldMode::Monotone,
        Some("aspherical") => ManifoldMode::Aspherical,
        Some(other) => {
            b.issue(issues, "mode", format!("unknown mode `{other}` (expected monotone or aspherical)"));
            return None;
        }
    };
    let n: Option<u32> = b.unsigned("n", true, issues);
    let lambda = b.rational("lambda", mode == ManifoldMode::Monotone, issues);
    let chern: u32 = b.unsigned("N", false, issues).unwrap_or(1);
    let n = n?;
    let model = match mode {
        ManifoldMode::Monotone => ManifoldModel::monotone(n, lambda?, chern),
        ManifoldMode::Aspherical => ManifoldModel::aspherical(n),
    };
    match model {
        Ok(m) => Some(m),
        Err(e) => {
            b.issue(issues, "n", e.to_string());
            None
        }
    }
}

fn parse_certification(b: &mut Block, issues: &mut Vec<ConfigIssue>) -> Option<CertificationInput> {
    let model = parse_model(b, issues);
    let r = b.rational("r", true, issues);
    let epsilon = b.rational("epsilon", true, issues);
    let energy = b.pi_rational("E", true, issues);
    let tau = b.pi_rational("tau", false, issues);
    let h_max = b.pi_rational("h_max", false, issues);
    let m = b.pi_rational("m", false, issues);
    let l_window: Option<u64> = b.unsigned("l_window", false, issues);
    let mut input = CertificationInput::new(model?, r?, epsilon?, energy?);
    input.tau = tau;
    input.h_max = h_max.unwrap_or_else(PiRational::zero);
    input.m = m;
    input.l_window = l_window;
    Some(input)
}

fn validate_certification(input: &CertificationInput, block: &str, issues: &mut Vec<ConfigIssue>) {
    for v in check_preconditions(input) {
        let field = if v.field == "plateau" { "a".to_string() } else { v.field };
        issues.push(ConfigIssue { path: format!("{block}.{field}"), message: v.message });
    }
}

fn parse_cover(b: &mut Block, base: &Path, issues: &mut Vec<ConfigIssue>) -> Option<BallCover> {
    let inline = b.get("cover");
    let file = b.string("cover_file", issues);
    let grid = b.get("torus_grid");
    let given = [inline.is_some(), file.is_some(), grid.is_some()].iter().filter(|x| **x).count();
    if given != 1 {
        b.issue(issues, "cover", "give exactly one of `cover`, `cover_file` or `torus_grid`");
        return None;
    }
    let cover = if let Some(v) = inline {
        serde_json::from_value::<BallCover>(v.clone()).map_err(|e| ("cover", e.to_string()))
    } else if let Some(f) = file {
        let path = base.join(&f);
        std::fs::read_to_string(&path)
            .map_err(|e| ("cover_file", format!("cannot read {}: {e}", path.display())))
            .and_then(|text| serde_json::from_str::<BallCover>(&text).map_err(|e| ("cover_file", e.to_string())))
    } else {
        let v = grid.expect("checked above");
        let mut g = Block::new(v, &b.at("torus_grid"), issues)?;
        let k: Option<usize> = g.unsigned("k", true, issues);
        let side = g.float("side", issues).unwrap_or(1.0);
        let overlap = g.float("overlap", issues).unwrap_or(1.2);
        g.finish(issues);
        match k {
            Some(k) if k > 0 => BallCover::torus_grid(k, side, overlap).map_err(|e| ("torus_grid", e.to_string())),
            Some(_) => Err(("torus_grid", "k must be positive".to_string())),
            None => return None,
        }
    };
    match cover.and_then(|c| c.validate().map(|_| c).map_err(|e| ("cover", e.to_string()))) {
        Ok(c) => Some(c),
        Err((key, message)) => {
            b.issue(issues, key, message);
            None
        }
    }
}

fn parse_command(name: &str, value: &Value, base: &Path, issues: &mut Vec<ConfigIssue>) -> Option<Command> {
    let mut b = Block::new(value, name, issues)?;
    let command = match name {
        "killer-certify" => {
            let input = parse_certification(&mut b, issues);
            if let Some(input) = &input {
                validate_certification(input, name, issues);
            }
            input.map(Command::KillerCertify)
        }
        "killer-probe" => {
            let input = parse_certification(&mut b, issues);
            let a = b.pi_rational("a", true, issues);
            match (input, a) {
                (Some(mut input), Some(a)) => {
                    input.plateau = Some(a.clone());
                    validate_certification(&input, name, issues);
                    input.plateau = None;
                    Some(Command::KillerProbe { input, a })
                }
                _ => None,
            }
        }
        "cover-analyze" => parse_cover(&mut b, base, issues).map(|cover| Command::CoverAnalyze { cover }),
        "cover-pb" => {
            let cover = parse_cover(&mut b, base, issues);
            let cutoff = match b.string("cutoff", issues).as_deref() {
                None | Some("polynomial") => Some(Cutoff::Polynomial),
                Some("exponential") => Some(Cutoff::Exponential),
                Some(other) => {
                    b.issue(issues, "cutoff", format!("unknown cutoff `{other}` (expected polynomial or exponential)"));
                    None
                }
            };
            let grid: usize = b.unsigned("grid", false, issues).unwrap_or(512);
            let support_scale = b.float("support_scale", issues).unwrap_or(1.0);
            let exact_cap: usize = b.unsigned("exact_l_cap", false, issues).unwrap_or(DEFAULT_EXACT_CAP);
            let grid_slack = b.float("grid_slack", issues).unwrap_or(0.0);
            let energy_asserted = b.boolean("energy_asserted", issues).unwrap_or(false);
            let write_field = b.boolean("write_field", issues).unwrap_or(false);
            if grid < 2 {
                b.issue(issues, "grid", "grid must be at least 2");
            }
            if support_scale <= 0.0 {
                b.issue(issues, "support_scale", "support scale must be positive");
            }
            if !(0.0..1.0).contains(&grid_slack) {
                b.issue(issues, "grid_slack", "grid slack must lie in [0, 1)");
            }
            if exact_cap > 30 {
                b.issue(issues, "exact_l_cap", "exact mode is limited to 30 members");
            }
            match (cover, cutoff) {
                (Some(cover), Some(cutoff)) => Some(Command::CoverPb(CoverPbSettings {
                    cover,
                    cutoff,
                    grid,
                    support_scale,
                    exact_cap,
                    grid_slack,
                    energy_asserted,
                    write_field,
                })),
                _ => None,
            }
        }
        "bound-propagate" => {
            let model = parse_model(&mut b, issues);
            let mut balls = Vec::new();
            match b.get("balls") {
                Some(Value::Array(items)) if !items.is_empty() => {
                    for (i, item) in items.iter().enumerate() {
                        let path = format!("{name}.balls[{i}]");
                        if let Some(mut bb) = Block::new(item, &path, issues) {
                            let r = bb.rational("r", true, issues);
                            let energy = bb.pi_rational("E", false, issues);
                            let epsilon = bb.rational("epsilon", false, issues);
                            bb.finish(issues);
                            if let Some(r) = r {
                                balls.push(BallSpec { r, energy, epsilon });
                            }
                        }
                    }
                }
                Some(_) => b.issue(issues, "balls", "expected a nonempty array"),
                None => b.issue(issues, "balls", "missing required field"),
            }
            let model = model?;
            for v in check_balls(&balls, &model) {
                issues.push(ConfigIssue { path: format!("{name}.balls[{}]", v.ball), message: v.message });
            }
            Some(Command::BoundPropagate { model, balls })
        }
        _ => unreachable!("command names are checked by the caller"),
    };
    b.finish(issues);
    command
}

/// Parses configuration text; `base` resolves relative file references.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| ConfigError::Json { path: base.to_path_buf(), message: e.to_string() })?;
    let mut issues = Vec::new();
    let Some(top) = value.as_object() else {
        return Err(ConfigError::Invalid(vec![ConfigIssue { path: "$".into(), message: "expected an object".into() }]));
    };
    let mut commands = Vec::new();
    for key in top.keys() {
        match key.as_str() {
            "output" | "seed" => {}
            k if COMMANDS.contains(&k) => commands.push(k.to_string()),
            k => issues.push(ConfigIssue {
                path: k.to_string(),
                message: format!("unknown command or field (valid commands: {})", COMMANDS.join(", ")),
            }),
        }
    }
    if commands.len() != 1 {
        issues.push(ConfigIssue {
            path: "$".into(),
            message: format!("expected exactly one command block (one of: {}), found {}", COMMANDS.join(", "), commands.len()),
        });
    }
    let command = match commands.as_slice() {
        [name] => parse_command(name, &top[name], base, &mut issues),
        _ => None,
    };

    let mut output = OutputSpec::default();
    if let Some(v) = top.get("output") {
        if let Some(mut b) = Block::new(v, "output", &mut issues) {
            output.dir = b.string("dir", &mut issues).map(|d| base.join(d));
            match b.get("formats") {
                None => {}
                Some(Value::Array(items)) => {
                    let names: Option<Vec<&str>> = items.iter().map(Value::as_str).collect();
                    match names.map(|n| parse_formats(&n.join(","))) {
                        Some(Ok(f)) => output.formats = f,
                        Some(Err(e)) => b.issue(&mut issues, "formats", e),
                        None => b.issue(&mut issues, "formats", "expected an array of strings"),
                    }
                }
                Some(_) => b.issue(&mut issues, "formats", "expected an array of strings"),
            }
            b.finish(&mut issues);
        }
    }
    let seed = match top.get("seed") {
        None | Some(Value::Null) => 0,
        Some(v) => match Block::literal(v).and_then(|t| t.parse::<u64>().ok()) {
            Some(s) => s,
            None => {
                issues.push(ConfigIssue { path: "seed".into(), message: "expected a nonnegative integer".into() });
                0
            }
        },
    };
    match command {
        Some(command) if issues.is_empty() => Ok(RunConfig { command, output, seed }),
        _ => Err(ConfigError::Invalid(issues)),
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base)
}

impl RunConfig {
    /// Applies command-line overrides. `--probe` turns a certification into
    /// a probe (or replaces the probe's `a`).
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        if let Some(dir) = &o.out {
            self.output.dir = Some(dir.clone());
        }
        if let Some(f) = &o.formats {
            self.output.formats = f.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(text) = &o.probe {
            match parse_pi_literal(text) {
                Ok(a) => {
                    let input = match &self.command {
                        Command::KillerCertify(input) | Command::KillerProbe { input, .. } => Some(input.clone()),
                        _ => None,
                    };
                    match input {
                        Some(input) => {
                            let mut probe = input.clone();
                            probe.plateau = Some(a.clone());
                            validate_certification(&probe, "killer-probe", &mut issues);
                            self.command = Command::KillerProbe { input, a };
                        }
                        None => issues.push(ConfigIssue { path: "--probe".into(), message: "only applies to killer commands".into() }),
                    }
                }
                Err(e) => issues.push(ConfigIssue { path: "--probe".into(), message: e }),
            }
        }
        if o.grid.is_some() || o.exact_l_cap.is_some() {
            match &mut self.command {
                Command::CoverPb(s) => {
                    if let Some(g) = o.grid {
                        if g < 2 {
                            issues.push(ConfigIssue { path: "--grid".into(), message: "grid must be at least 2".into() });
                        }
                        s.grid = g;
                    }
                    if let Some(c) = o.exact_l_cap {
                        if c > 30 {
                            issues.push(ConfigIssue { path: "--exact-l-cap".into(), message: "exact mode is limited to 30 members".into() });
                        }
                        s.exact_cap = c;
                    }
                }
                _ => issues.push(ConfigIssue { path: "--grid/--exact-l-cap".into(), message: "only apply to cover-pb".into() }),
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config_str(text, Path::new(""))
    }

    #[test]
    fn minimal_certify_gets_defaults() {
        let cfg = parse(r#"{"killer-certify": {"n": 1, "lambda": -1, "r": 0.35, "epsilon": 0.05, "E": 0.4}}"#).unwrap();
        let Command::KillerCertify(input) = &cfg.command else { panic!() };
        assert_eq!(input.model.chern_gen, 1);
        assert!(input.h_max.is_zero());
        assert!(input.tau.is_none());
        assert_eq!(input.r, parse_rational("7/20").unwrap());
        assert_eq!(cfg.output, OutputSpec::default());
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn epsilon_violation_names_field() {
        let err = parse(r#"{"killer-certify": {"n": 1, "lambda": -1, "r": 0.35, "epsilon": 0.1, "E": 0.4}}"#).unwrap_err();
        assert!(err.issues().iter().any(|i| i.path == "killer-certify.epsilon"), "{err}");
    }

    #[test]
    fn unknown_command_lists_valid_ones() {
        let err = parse(r#"{"killer-sertify": {}}"#).unwrap_err();
        let text = err.to_string();
        for c in COMMANDS {
            assert!(text.contains(c));
        }
    }

    #[test]
    fn errors_are_aggregated() {
        let err = parse(r#"{"killer-certify": {"n": "x", "lambda": -1, "r": "bad", "E": 0.4, "extra": 1}, "seed": -3}"#).unwrap_err();
        let paths: Vec<&str> = err.issues().iter().map(|i| i.path.as_str()).collect();
        for p in ["killer-certify.n", "killer-certify.r", "killer-certify.epsilon", "killer-certify.extra", "seed"] {
            assert!(paths.contains(&p), "{paths:?}");
        }
    }

    #[test]
    fn two_commands_rejected() {
        let err = parse(r#"{"cover-analyze": {"torus_grid": {"k": 2}}, "cover-pb": {"torus_grid": {"k": 2}}}"#).unwrap_err();
        assert!(err.to_string().contains("exactly one"));
    }

    #[test]
    fn pi_literals() {
        assert_eq!(parse_pi_literal("0.09pi").unwrap(), PiRational::pi_multiple(parse_rational("0.09").unwrap()));
        assert_eq!(parse_pi_literal("1/4 * pi").unwrap(), PiRational::pi_multiple(parse_rational("1/4").unwrap()));
        assert_eq!(parse_pi_literal("-π").unwrap(), -PiRational::pi());
        assert_eq!(parse_pi_literal("0.4").unwrap(), PiRational::parse("0.4").unwrap());
        assert!(parse_pi_literal("x pi").is_err());
    }

    #[test]
    fn probe_range_checked_against_a() {
        let err = parse(r#"{"killer-probe": {"n": 1, "lambda": -1, "r": 0.35, "epsilon": 0.05, "E": 0.4, "a": 0.1}}"#).unwrap_err();
        assert!(err.issues().iter().any(|i| i.path == "killer-probe.a"));
    }

    #[test]
    fn overrides_switch_to_probe() {
        let mut cfg = parse(r#"{"killer-certify": {"n": 1, "lambda": -1, "r": 0.35, "epsilon": 0.05, "E": 0.4}}"#).unwrap();
        cfg.apply(&Overrides { probe: Some("-0.1".into()), seed: Some(9), ..Default::default() }).unwrap();
        assert!(matches!(cfg.command, Command::KillerProbe { .. }));
        assert_eq!(cfg.seed, 9);
        assert!(cfg.apply(&Overrides { grid: Some(64), ..Default::default() }).is_err());
    }

    #[test]
    fn bound_propagate_balls() {
        let cfg = parse(r#"{"bound-propagate": {"n": 1, "lambda": -1, "balls": [{"r": 0.2}, {"r": 0.3, "E": "0.09pi"}]}}"#).unwrap();
        let Command::BoundPropagate { balls, .. } = cfg.command else { panic!() };
        assert_eq!(balls.len(), 2);
        let err = parse(r#"{"bound-propagate": {"n": 1, "lambda": -1, "balls": [{"r": 0.2}, {"r": 0.3, "E": 0.6}]}}"#).unwrap_err();
        assert_eq!(err.issues()[0].path, "bound-propagate.balls[1]");
    }

    #[test]
    fn cover_sources() {
        let cfg = parse(r#"{"cover-pb": {"torus_grid": {"k": 4}, "grid": 64}, "output": {"formats": ["md", "json"]}}"#).unwrap();
        let Command::CoverPb(s) = &cfg.command else { panic!() };
        assert_eq!(s.cover.len(), 16);
        assert_eq!(cfg.output.formats, vec![Format::Json, Format::Md]);
        let cfg = parse(r#"{"cover-analyze": {"cover": {"domain": {"rect": [0, 0, 2, 1]}, "balls": [{"c": [0.5, 0.5], "r": 0.6}]}}}"#).unwrap();
        assert!(matches!(cfg.command, Command::CoverAnalyze { .. }));
        assert!(parse(r#"{"cover-analyze": {}}"#).is_err());
    }
}
