//! Certificate that the spectral invariant of the certification profile
//! vanishes.
//!
//! The invariant is the action of some capped orbit of Conley–Zehnder index
//! `n`, and it lies in `[0, E]`. The certifier enumerates every index-`n`
//! class of the (idealized) profile, sorted into seven families:
//!
//! | step | orbits                                   |
//! |------|------------------------------------------|
//! | 1    | centre maximum on the plateau `m`        |
//! | 2    | critical points on the shell plateau     |
//! | 3    | critical points outside the ball         |
//! | 4–7  | circles at the four corners              |
//!
//! and checks that no action lands in `(τ, E]`. If none does, the invariant is
//! forced to be zero.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{bigint_to_i64, ceil_div, first_multiple_above, rational_from_int, ExactError, PiRational};
use crate::floer::{
    index_n_solutions, recap, AtlasError, CappedOrbitClass, ManifoldMode, ManifoldModel, OrbitKind, OrbitRow,
};
use crate::radial::{ball_area, make_plateau_profile, shell_abscissa, ProfileError, RadialProfile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error("corner of step {step} carries {count} windings, more than the window cap {cap}")]
    WindowOverflow { step: u8, count: String, cap: u64 },
    #[error("plateau value {0} outside [-πr², 0]")]
    PlateauOutOfRange(String),
    #[error("invalid input: {0:?}")]
    InvalidInput(Vec<Violation>),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificationInput {
    pub model: ManifoldModel,
    pub r: BigRational,
    pub epsilon: BigRational,
    /// Displacement-energy bound `E` of the ball (trusted input).
    pub energy: PiRational,
    /// Zero tolerance; `None` means `10⁻⁶·πr²`.
    pub tau: Option<PiRational>,
    /// Upper bound on `max H`.
    pub h_max: PiRational,
    pub m: Option<PiRational>,
    /// Shell plateau value; `None` means `-πr²`.
    pub plateau: Option<PiRational>,
    pub l_window: Option<u64>,
}

impl CertificationInput {
    pub fn new(model: ManifoldModel, r: BigRational, epsilon: BigRational, energy: PiRational) -> Self {
        Self {
            model,
            r,
            epsilon,
            energy,
            tau: None,
            h_max: PiRational::zero(),
            m: None,
            plateau: None,
            l_window: None,
        }
    }

    pub fn area(&self) -> PiRational {
        ball_area(&self.r)
    }

    pub fn tau(&self) -> PiRational {
        self.tau
            .clone()
            .unwrap_or_else(|| self.area().scale(&BigRational::new(1.into(), 1_000_000.into())))
    }

    pub fn plateau(&self) -> PiRational {
        self.plateau.clone().unwrap_or_else(|| -self.area())
    }

    /// `nλ - π(r - kε)²`, the per-winding action step of the corner family `k`.
    pub fn corner_step(&self, k: i64) -> PiRational {
        let n_lambda = self.model.effective_lambda() * rational_from_int(self.model.n());
        PiRational::from_rational(n_lambda)
            - PiRational::pi_multiple(shell_abscissa(&self.r, &self.epsilon, k) * rational_from_int(2))
    }
}

pub fn check_preconditions(input: &CertificationInput) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(e) = input.model.validate() {
        out.push(Violation::new("model", e.to_string()));
    }
    if !input.r.is_positive() {
        out.push(Violation::new("r", "radius must be positive"));
    }
    if !input.epsilon.is_positive() {
        out.push(Violation::new("epsilon", "epsilon must be positive"));
    } else if &input.epsilon * rational_from_int(4) >= input.r {
        out.push(Violation::new("epsilon", "epsilon must satisfy epsilon < r/4"));
    }
    if !input.tau().is_positive() {
        out.push(Violation::new("tau", "tolerance must be positive"));
    }
    if !input.energy.is_positive() {
        out.push(Violation::new("E", "energy bound must be positive"));
    }
    if input.h_max.is_negative() {
        out.push(Violation::new("h_max", "h_max must be nonnegative"));
    }
    if let Some(m) = &input.m {
        if !m.is_positive() {
            out.push(Violation::new("m", "m must be positive"));
        }
    }
    if let Some(a) = &input.plateau {
        if *a < -input.area() || a.is_positive() {
            out.push(Violation::new("plateau", "plateau must lie in [-πr², 0]"));
        }
    }
    if input.model.mode == ManifoldMode::Monotone && input.r.is_positive() {
        let area = input.area();
        if input.energy < area {
            out.push(Violation::new("E", format!("requires πr² ≤ E (πr² ≈ {:.6})", area.to_f64())));
        }
        let half_lambda = PiRational::from_rational(input.model.lambda.abs() / rational_from_int(2));
        if input.energy >= half_lambda {
            out.push(Violation::new("E", format!("requires E < |λ|/2 = {}", half_lambda)));
        }
    }
    out
}

/// Smallest positive multiple of `|nλ - π(r-4ε)²|` strictly above
/// `max(h_max + πr², E) + τ`.
pub fn choose_m(input: &CertificationInput) -> Result<PiRational, ExactError> {
    let step = input.corner_step(4).abs();
    let threshold = (&input.h_max + input.area()).max(input.energy.clone()) + input.tau();
    let k = first_multiple_above(&threshold, &step)?;
    Ok(step.scale(&BigRational::from_integer(k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Zero,
    Negative,
    AboveE,
    ForbiddenInRange,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Zero => "ZERO",
            Verdict::Negative => "NEGATIVE",
            Verdict::AboveE => "ABOVE_E",
            Verdict::ForbiddenInRange => "FORBIDDEN_IN_RANGE",
        }
    }
}

pub fn classify(action: &PiRational, tau: &PiRational, energy: &PiRational) -> Verdict {
    if action.abs() <= *tau {
        Verdict::Zero
    } else if *action < -tau {
        Verdict::Negative
    } else if action > energy {
        Verdict::AboveE
    } else {
        Verdict::ForbiddenInRange
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitVerdict {
    pub step: u8,
    pub orbit: CappedOrbitClass,
    pub action: PiRational,
    pub verdict: Verdict,
}

/// Affine action family `offset + variable·slope` and the integers whose
/// action can reach `[-τ, E + τ]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyWindow {
    pub step: u8,
    pub variable: String,
    pub offset: PiRational,
    pub slope: PiRational,
    /// Inclusive integer window, `None` when no integer qualifies.
    pub window: Option<(i64, i64)>,
    /// Inclusive range actually realized by the profile/model.
    pub realized: Option<(i64, i64)>,
    pub slope_exceeds_energy: bool,
    /// Both neighbours of the window were checked exactly to lie outside
    /// `[-τ, E + τ]` on opposite sides.
    pub exclusion_verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateStatus {
    Certified,
    Refuted(Box<OrbitVerdict>),
    InvalidInput(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralCertificate {
    pub status: CertificateStatus,
    pub input: CertificationInput,
    pub chosen_m: Option<PiRational>,
    pub table: Vec<OrbitVerdict>,
    pub windows: Vec<FamilyWindow>,
}

impl SpectralCertificate {
    pub fn is_certified(&self) -> bool {
        matches!(self.status, CertificateStatus::Certified)
    }

    pub fn offender(&self) -> Option<&OrbitVerdict> {
        match &self.status {
            CertificateStatus::Refuted(o) => Some(o),
            _ => None,
        }
    }

    pub fn steps_present(&self) -> Vec<u8> {
        let mut steps: Vec<u8> = self.table.iter().map(|r| r.step).collect();
        steps.dedup();
        steps
    }

    /// The deduction the table supports.
    pub fn logical_frame(&self) -> Vec<String> {
        vec![
            "c(F) ∈ [0, E]: energy-capacity inequality plus nonnegativity on displaceable sets".into(),
            "spectrality: c(F) is the action of a capped 1-periodic orbit of Conley–Zehnder index n".into(),
            "table: every index-n action is ZERO (|a| ≤ τ), NEGATIVE, or ABOVE_E".into(),
            match self.status {
                CertificateStatus::Certified => "conclusion: c(F) = 0 up to the tolerance τ".into(),
                CertificateStatus::Refuted(_) => "conclusion: not certified, an index-n action lies in (τ, E]".into(),
                CertificateStatus::InvalidInput(_) => "conclusion: preconditions failed, no deduction".into(),
            },
        ]
    }
}

fn certification_profile(input: &CertificationInput, m: &PiRational) -> Result<RadialProfile, ProfileError> {
    make_plateau_profile(&input.r, &input.epsilon, m, &input.plateau())
}

/// Enumerates every index-`n` capped orbit class and classifies its action.
pub fn enumerate_index_n(input: &CertificationInput, m: &PiRational) -> Result<Vec<OrbitVerdict>, CertifyError> {
    let model = &input.model;
    let n = model.n();
    let tau = input.tau();
    let energy = &input.energy;
    let judge = |step: u8, orbit: CappedOrbitClass| {
        let action = orbit.action_value(model);
        let verdict = classify(&action, &tau, energy);
        OrbitVerdict { step, orbit, action, verdict }
    };

    let mut rows = Vec::new();
    rows.push(judge(1, CappedOrbitClass::trivial("center", m.clone(), 2 * model.n, model)?));

    for (step, id, value) in [(2u8, "shell", input.plateau()), (3u8, "outside", PiRational::zero())] {
        for c1 in -n..=0 {
            if !model.admits_c1(c1) {
                continue;
            }
            let morse = (2 * n + 2 * c1) as u32;
            let orbit = recap(&CappedOrbitClass::trivial(id, value.clone(), morse, model)?, c1, model)?;
            debug_assert_eq!(orbit.index, n);
            rows.push(judge(step, orbit));
        }
    }

    let profile = certification_profile(input, m)?;
    for corner in profile.corners() {
        let step = 4 + corner.node as u8;
        if let Some(cap) = input.l_window {
            let count = corner.winding_count();
            if count > BigInt::from(cap) {
                return Err(CertifyError::WindowOverflow { step, count: count.to_string(), cap });
            }
        }
        for l in corner.windings()? {
            let circle = corner.circle(l);
            for (branch, c1) in index_n_solutions(&circle, model) {
                let orbit = recap(&CappedOrbitClass::circle(circle.clone(), branch, model), c1, model)?;
                debug_assert_eq!(orbit.index, n);
                rows.push(judge(step, orbit));
            }
        }
    }

    rows.sort_by(|a, b| {
        (a.step, a.orbit.winding(), a.orbit.c1).cmp(&(b.step, b.orbit.winding(), b.orbit.c1))
    });
    Ok(rows)
}

/// Closed-form action of the index-`n` class in family `step` with winding `l`
/// (or Chern number `c1` on plateaus), independent of the profile machinery.
pub fn closed_form_action(input: &CertificationInput, m: &PiRational, step: u8, l: i64, c1: i64) -> Option<PiRational> {
    let lambda = PiRational::from_rational(input.model.effective_lambda());
    let n_lambda = lambda.scale_int(input.model.n());
    let plateau = input.plateau();
    let li = |x: &PiRational| x.scale_int(l);
    Some(match step {
        1 => m.clone(),
        2 => &plateau - lambda.scale_int(c1),
        3 => -lambda.scale_int(c1),
        4 => m + li(&input.corner_step(4)),
        5 => &n_lambda + &plateau + li(&input.corner_step(3)),
        6 => &n_lambda + &plateau + li(&input.corner_step(2)),
        7 => li(&input.corner_step(1)),
        _ => return None,
    })
}

/// Re-checks every row against the closed-form families and the verdict rule.
/// Returns one message per discrepancy.
pub fn verify_table(cert: &SpectralCertificate) -> Vec<String> {
    let Some(m) = &cert.chosen_m else {
        return Vec::new();
    };
    let input = &cert.input;
    let (tau, energy) = (input.tau(), &input.energy);
    let mut problems = Vec::new();
    for (i, row) in cert.table.iter().enumerate() {
        let l = row.orbit.winding();
        match closed_form_action(input, m, row.step, l, row.orbit.c1) {
            Some(expected) if expected == row.action => {}
            Some(expected) => problems.push(format!("row {i}: action {} differs from family value {}", row.action, expected)),
            None => problems.push(format!("row {i}: unknown step {}", row.step)),
        }
        if (4..=7).contains(&row.step) && input.model.mode == ManifoldMode::Monotone {
            let n = input.model.n();
            let expected_c1 = if matches!(row.step, 4 | 7) { -l * n } else { -n * (l + 1) };
            if row.orbit.c1 != expected_c1 {
                problems.push(format!("row {i}: c1 = {} but the index-n family needs {}", row.orbit.c1, expected_c1));
            }
        }
        if row.orbit.index != input.model.n() {
            problems.push(format!("row {i}: index {} ≠ n", row.orbit.index));
        }
        let verdict = classify(&row.action, &tau, energy);
        if verdict != row.verdict {
            problems.push(format!("row {i}: verdict {:?} should be {:?}", row.verdict, verdict));
        }
    }
    problems
}

/// Integers `v` with `lo ≤ offset + v·slope ≤ hi`, for `slope ≠ 0`.
fn integer_window(
    offset: &PiRational,
    slope: &PiRational,
    lo: &PiRational,
    hi: &PiRational,
) -> Result<(BigInt, BigInt), ExactError> {
    let (a, b) = (lo - offset, hi - offset);
    let (first, last) = if slope.is_positive() { (a, b) } else { (b, a) };
    Ok((ceil_div(&first, slope)?, last.floor_div(slope)?))
}

fn affine(offset: &PiRational, slope: &PiRational, v: &BigInt) -> PiRational {
    offset + slope.scale(&BigRational::from_integer(v.clone()))
}

/// `(step, variable, offset, slope, realized range)`.
type Family<'a> = (u8, &'a str, PiRational, PiRational, Option<(i64, i64)>);

/// Per-family windows, monotone mode only (aspherical families are single rows).
pub fn family_windows(input: &CertificationInput, m: &PiRational) -> Result<Vec<FamilyWindow>, CertifyError> {
    if input.model.mode != ManifoldMode::Monotone {
        return Ok(Vec::new());
    }
    let tau = input.tau();
    let low = -tau.clone();
    let high = &input.energy + &tau;
    let lambda = PiRational::from_rational(input.model.lambda.clone());
    let n = input.model.n();
    let profile = certification_profile(input, m)?;
    let corners = profile.corners();

    let mut families: Vec<Family> = Vec::new();
    let realized_c1 = {
        let c1s: Vec<i64> = (-n..=0).filter(|c| input.model.admits_c1(*c)).collect();
        Some((*c1s.first().unwrap_or(&0), *c1s.last().unwrap_or(&0)))
    };
    families.push((2, "c1", input.plateau(), -lambda.clone(), realized_c1));
    families.push((3, "c1", PiRational::zero(), -lambda.clone(), realized_c1));
    for step in 4u8..=7 {
        let k = 8 - step as i64;
        let slope = input.corner_step(k);
        let zero = PiRational::from_int(0);
        let offset = closed_form_action(input, m, step, 0, 0).unwrap_or(zero);
        let realized = corners
            .iter()
            .find(|c| 4 + c.node as u8 == step)
            .and_then(|c| Some((bigint_to_i64(&c.l_min).ok()?, bigint_to_i64(&c.l_max).ok()?)));
        families.push((step, "l", offset, slope, realized));
    }

    let mut out = Vec::new();
    for (step, variable, offset, slope, realized) in families {
        let (lo, hi) = integer_window(&offset, &slope, &low, &high)?;
        let below = affine(&offset, &slope, &(&lo - 1));
        let above = affine(&offset, &slope, &(&hi + 1));
        let outside = |x: &PiRational| *x < low || *x > high;
        let opposite = (below < low && above > high) || (below > high && above < low);
        let exclusion_verified = outside(&below) && outside(&above) && opposite;
        let window = if lo <= hi { Some((bigint_to_i64(&lo)?, bigint_to_i64(&hi)?)) } else { None };
        out.push(FamilyWindow {
            step,
            variable: variable.to_string(),
            slope_exceeds_energy: slope.abs() > input.energy,
            offset,
            slope,
            window,
            realized,
            exclusion_verified,
        });
    }
    Ok(out)
}

fn run(input: &CertificationInput) -> Result<SpectralCertificate, CertifyError> {
    let violations = check_preconditions(input);
    if !violations.is_empty() {
        return Ok(SpectralCertificate {
            status: CertificateStatus::InvalidInput(violations),
            input: input.clone(),
            chosen_m: None,
            table: Vec::new(),
            windows: Vec::new(),
        });
    }
    let m = match &input.m {
        Some(m) => m.clone(),
        None => choose_m(input)?,
    };
    let table = enumerate_index_n(input, &m)?;
    let windows = family_windows(input, &m)?;
    let status = match table.iter().find(|r| r.verdict == Verdict::ForbiddenInRange) {
        Some(offender) => CertificateStatus::Refuted(Box::new(offender.clone())),
        None if table.is_empty() => CertificateStatus::InvalidInput(vec![Violation::new("table", "no index-n orbits")]),
        None => CertificateStatus::Certified,
    };
    Ok(SpectralCertificate { status, input: input.clone(), chosen_m: Some(m), table, windows })
}

/// Runs the full enumeration. Precondition failures yield an
/// `InvalidInput` certificate rather than an error.
pub fn certify(input: &CertificationInput) -> Result<SpectralCertificate, CertifyError> {
    run(input)
}

/// Reruns certification with the shell plateau raised to `a ∈ [-πr², 0]`.
pub fn probe_plateau(input: &CertificationInput, a: &PiRational) -> Result<SpectralCertificate, CertifyError> {
    let area = input.area();
    if *a < -area || a.is_positive() {
        return Err(CertifyError::PlateauOutOfRange(a.to_string()));
    }
    let mut probed = input.clone();
    probed.plateau = Some(a.clone());
    run(&probed)
}

/// Action `π(r-3ε)² + a` of the winding `-1` circle at the shell's inner
/// corner when the plateau is `a`.
pub fn probe_offender_action(input: &CertificationInput, a: &PiRational) -> PiRational {
    PiRational::pi_multiple(shell_abscissa(&input.r, &input.epsilon, 3) * rational_from_int(2)) + a
}

/// Sign summary used by reports: `-1`, `0` or `1`.
pub fn sign_of(x: &PiRational) -> i8 {
    match x.signum() {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

/// Kind label of a row.
pub fn row_kind(o: &CappedOrbitClass) -> &'static str {
    match o.kind {
        OrbitKind::Trivial { .. } => "trivial",
        OrbitKind::Circle { .. } => "circle",
    }
}

/// Serializable certificate, the JSON artifact written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub status: String,
    #[serde(default)]
    pub offender: Option<VerdictRow>,
    #[serde(default)]
    pub violations: Vec<Violation>,
    pub chosen_m: Option<PiRational>,
    pub parameters: ParameterEcho,
    pub logical_frame: Vec<String>,
    pub windows: Vec<FamilyWindow>,
    pub table: Vec<VerdictRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub step: u8,
    pub orbit: OrbitRow,
    pub action_value: PiRational,
    pub action_approx: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEcho {
    pub model: ManifoldModel,
    #[serde(with = "crate::exact::rational_string")]
    pub r: BigRational,
    #[serde(with = "crate::exact::rational_string")]
    pub epsilon: BigRational,
    #[serde(rename = "E")]
    pub energy: PiRational,
    pub tau: PiRational,
    pub h_max: PiRational,
    pub m_override: Option<PiRational>,
    pub plateau: PiRational,
    pub l_window: Option<u64>,
}

fn verdict_row(v: &OrbitVerdict) -> VerdictRow {
    VerdictRow {
        step: v.step,
        orbit: OrbitRow::from(&v.orbit),
        action_value: v.action.clone(),
        action_approx: crate::report::round_sig(v.action.to_f64()),
        verdict: v.verdict,
    }
}

impl SpectralCertificate {
    pub fn status_label(&self) -> &'static str {
        match self.status {
            CertificateStatus::Certified => "CERTIFIED",
            CertificateStatus::Refuted(_) => "REFUTED",
            CertificateStatus::InvalidInput(_) => "INVALID_INPUT",
        }
    }

    pub fn to_report(&self) -> CertificateReport {
        let input = &self.input;
        CertificateReport {
            status: self.status_label().to_string(),
            offender: self.offender().map(verdict_row),
            violations: match &self.status {
                CertificateStatus::InvalidInput(v) => v.clone(),
                _ => Vec::new(),
            },
            chosen_m: self.chosen_m.clone(),
            parameters: ParameterEcho {
                model: input.model.clone(),
                r: input.r.clone(),
                epsilon: input.epsilon.clone(),
                energy: input.energy.clone(),
                tau: input.tau(),
                h_max: input.h_max.clone(),
                m_override: input.m.clone(),
                plateau: input.plateau(),
                l_window: input.l_window,
            },
            logical_frame: self.logical_frame(),
            windows: self.windows.clone(),
            table: self.table.iter().map(verdict_row).collect(),
        }
    }
}

/// Number of table rows per step, for summaries.
pub fn rows_per_step(table: &[OrbitVerdict]) -> [usize; 7] {
    let mut counts = [0usize; 7];
    for row in table {
        if (1..=7).contains(&row.step) {
            counts[row.step as usize - 1] += 1;
        }
    }
    counts
}

/// Float view of a rational, used for defaults in summaries.
pub fn rational_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
