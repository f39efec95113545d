//! Interval calculus for spectral invariants and the partial quasi-state.
//!
//! Hamiltonians are opaque ids carrying support and definition metadata.
//! A [`BoundTrace`] is an append-only list of facts, each produced by a
//! [`Rule`] from earlier facts. Every rule can recompute its conclusion, so a
//! trace can be replayed and checked fact by fact with [`BoundTrace::audit`].
//!
//! Bounds are affine in one symbol `t = √(2πr²·ν_c)`, which is what the
//! Poisson bracket chain needs; everything else uses constant bounds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certifier::{certify, CertificationInput};
use crate::exact::{rational_from_int, ExactError, PiRational};
use crate::floer::{ManifoldMode, ManifoldModel};
use crate::radial::{ball_area, make_killer, sup_norm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalculusError {
    #[error("unknown hamiltonian `{0}`")]
    UnknownHamiltonian(String),
    #[error("unknown ball {0}")]
    UnknownBall(usize),
    #[error("fact {0} does not exist yet")]
    UnknownFact(usize),
    #[error("duplicate declaration `{0}`")]
    Duplicate(String),
    #[error("rule {rule}: {message}")]
    Schema { rule: &'static str, message: String },
    #[error("missing premise: {0}")]
    MissingPremise(String),
    #[error("ball preconditions failed: {}", .0.iter().map(|v| format!("ball {}: {}", v.ball, v.message)).collect::<Vec<_>>().join("; "))]
    Preconditions(Vec<BallViolation>),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

fn schema(rule: &'static str, message: impl Into<String>) -> CalculusError {
    CalculusError::Schema { rule, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallViolation {
    pub ball: usize,
    pub message: String,
}

/// Affine bound `constant + t_coeff·t` with `t ≥ 0` symbolic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bound {
    pub constant: PiRational,
    #[serde(with = "crate::exact::rational_string")]
    pub t_coeff: BigRational,
}

impl Bound {
    pub fn constant(value: PiRational) -> Self {
        Self { constant: value, t_coeff: BigRational::zero() }
    }

    pub fn t(coeff: BigRational) -> Self {
        Self { constant: PiRational::zero(), t_coeff: coeff }
    }

    pub fn is_constant(&self) -> bool {
        self.t_coeff.is_zero()
    }

    fn add(&self, other: &Bound) -> Bound {
        Bound { constant: &self.constant + &other.constant, t_coeff: &self.t_coeff + &other.t_coeff }
    }

    fn neg(&self) -> Bound {
        Bound { constant: -&self.constant, t_coeff: -&self.t_coeff }
    }

    /// `self ≤ other` for every `t ≥ 0`.
    pub fn le(&self, other: &Bound) -> bool {
        self.constant <= other.constant && self.t_coeff <= other.t_coeff
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.constant.is_zero(), self.t_coeff.is_zero()) {
            (_, true) => write!(f, "{}", self.constant),
            (true, false) => write!(f, "{}·t", self.t_coeff),
            (false, false) => write!(f, "{} + {}·t", self.constant, self.t_coeff),
        }
    }
}

/// Closed interval with optional (infinite) ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Option<Bound>,
    pub hi: Option<Bound>,
}

impl Interval {
    pub fn new(lo: Option<Bound>, hi: Option<Bound>) -> Self {
        Self { lo, hi }
    }

    pub fn closed(lo: PiRational, hi: PiRational) -> Self {
        Self { lo: Some(Bound::constant(lo)), hi: Some(Bound::constant(hi)) }
    }

    pub fn point(value: PiRational) -> Self {
        Self::closed(value.clone(), value)
    }

    pub fn at_most(hi: Bound) -> Self {
        Self { lo: None, hi: Some(hi) }
    }

    pub fn at_least(lo: Bound) -> Self {
        Self { lo: Some(lo), hi: None }
    }

    pub fn lo_const(&self) -> Option<&PiRational> {
        self.lo.as_ref().filter(|b| b.is_constant()).map(|b| &b.constant)
    }

    pub fn hi_const(&self) -> Option<&PiRational> {
        self.hi.as_ref().filter(|b| b.is_constant()).map(|b| &b.constant)
    }

    /// Nonempty when the ends are comparable constants in order.
    pub fn is_nonempty(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Some(lo), Some(hi)) if lo.is_constant() && hi.is_constant() => lo.constant <= hi.constant,
            _ => true,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.lo.as_ref().map_or("-∞".to_string(), |b| b.to_string());
        let hi = self.hi.as_ref().map_or("+∞".to_string(), |b| b.to_string());
        write!(f, "[{lo}, {hi}]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantity {
    /// `c(H)`.
    Spectral(String),
    /// `c(H)` for every Hamiltonian supported in the union of these balls.
    SpectralClass(Vec<usize>),
    /// `c(H^{#m})` under the hypothesis `c(H) = -δ`, for `H` in the class.
    SpectralIterate { class: Vec<usize>, m: u64 },
    /// `c(sH)` for every `s > 0`.
    SpectralScaled(String),
    SupNorm(String),
    Zeta(String),
    /// `|ζ(F+G) - ζ(F) - ζ(G)|`.
    Defect(String, String),
    /// `S(F, G)`.
    Overlap(String, String),
    /// The symbol `t = √(2πr²·ν_c)`.
    SymbolT,
    /// `ν_c·πr²`.
    NuTimesArea,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let balls = |b: &[usize]| b.iter().map(|i| format!("U{i}")).collect::<Vec<_>>().join("∪");
        match self {
            Quantity::Spectral(h) => write!(f, "c({h})"),
            Quantity::SpectralClass(b) => write!(f, "c(H), supp H ⊂ {}", balls(b)),
            Quantity::SpectralIterate { class, m } => write!(f, "c(H^#{m}), supp H ⊂ {}", balls(class)),
            Quantity::SpectralScaled(h) => write!(f, "c(s·{h}), s > 0"),
            Quantity::SupNorm(h) => write!(f, "‖{h}‖∞"),
            Quantity::Zeta(h) => write!(f, "ζ({h})"),
            Quantity::Defect(a, b) => write!(f, "Π({a}, {b})"),
            Quantity::Overlap(a, b) => write!(f, "S({a}, {b})"),
            Quantity::SymbolT => write!(f, "t"),
            Quantity::NuTimesArea => write!(f, "ν_c·πr²"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Global,
    Balls(BTreeSet<usize>),
}

impl Support {
    pub fn balls<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        Support::Balls(ids.into_iter().collect())
    }

    fn within(&self, class: &[usize]) -> bool {
        match self {
            Support::Global => false,
            Support::Balls(b) => b.iter().all(|i| class.contains(i)),
        }
    }

    fn disjoint(&self, other: &Support) -> bool {
        match (self, other) {
            (Support::Balls(a), Support::Balls(b)) => a.is_disjoint(b),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definition {
    Atom,
    Zero,
    Constant(PiRational),
    /// Radial killer on a declared ball with shell width `epsilon`.
    Killer {
        ball: usize,
        #[serde(with = "crate::exact::rational_string")]
        epsilon: BigRational,
    },
    Sum(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractHamiltonian {
    pub id: String,
    pub support: Support,
    pub definition: Definition,
    /// Known pointwise value of the function, e.g. `1` for a partition sum.
    #[serde(default)]
    pub equals_constant: Option<PiRational>,
    #[serde(default)]
    pub norm_bound: Option<PiRational>,
    #[serde(default)]
    pub tags: Vec<String>,
}

impl AbstractHamiltonian {
    pub fn atom(id: &str, support: Support) -> Self {
        Self {
            id: id.to_string(),
            support,
            definition: Definition::Atom,
            equals_constant: None,
            norm_bound: None,
            tags: Vec::new(),
        }
    }

    pub fn sum(id: &str, support: Support, parts: &[&str]) -> Self {
        Self {
            definition: Definition::Sum(parts.iter().map(|s| s.to_string()).collect()),
            ..Self::atom(id, support)
        }
    }

    pub fn with_tag(mut self, tag: &str) -> Self {
        self.tags.push(tag.to_string());
        self
    }

    fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }
}

/// Tag for a function that is a sum of partition members supported in
/// pairwise disjoint balls of radius at most `r`.
pub const COLOR_CLASS: &str = "color-class";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallDecl {
    pub id: usize,
    #[serde(default, with = "option_rational")]
    pub r: Option<BigRational>,
    /// Displacement energy bound of the ball.
    #[serde(rename = "E")]
    pub energy: PiRational,
}

mod option_rational {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::exact::{format_rational, parse_rational};

    pub fn serialize<S: Serializer>(q: &Option<BigRational>, serializer: S) -> Result<S::Ok, S::Error> {
        q.as_ref().map(format_rational).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<BigRational>, D::Error> {
        Option::<String>::deserialize(deserializer)?
            .map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `c(0) = 0`.
    Normalization { ham: String },
    /// `|c(H)| ≤ E(U)` for `H` supported in a displaceable ball.
    EnergyCapacity { ball: usize },
    /// `|c(H)| ≤ Σ E(U_i)` on a union of disjoint balls; premises are the
    /// per-ball class facts.
    DisjointEnergyCapacity,
    /// Under `c(H) = -δ`, `m` triangle steps give `c(H^{#m}) ≤ -mδ`.
    IterateTriangle { delta: PiRational, m: u64 },
    /// Contradiction of the iterate with the class lower bound.
    Nonnegativity { delta: PiRational, m: u64 },
    /// Specializes a class fact to a member.
    Instantiate { ham: String },
    /// Imported certificate `c(H_i + K_i) = 0`, replayed by the certifier.
    Certified { ham: String },
    /// `‖K‖∞` of a radial killer, recomputed from its profile.
    KillerSupNorm { ham: String },
    /// Declared `norm_bound` of a Hamiltonian.
    DeclaredSupNorm { ham: String },
    /// `‖ΣK_i‖∞ = max ‖K_i‖∞` for disjointly supported parts.
    DisjointSupNorm { ham: String },
    /// `c(ΣH_i) ≤ Σ c(H_i)` for disjointly supported parts.
    Triangle { ham: String },
    /// `|c(H) - c(G)| ≤ ‖H - G‖∞`.
    Continuity { ham: String, reference: String, difference: String },
    /// Intersection of two facts about one quantity.
    Intersect,
    /// `c(sF) ∈ [0, πr²]` for all `s > 0`, `F` a color class.
    TheoremInstance { ham: String, area: PiRational },
    /// `ζ(F) = 0` from `0 ≤ c(sF) ≤ C` for all `s > 0`.
    ZetaOfCapped { ham: String },
    /// `ζ(C) = C` for a constant function.
    ZetaNormalization { ham: String },
    /// `ζ(F) ≤ ζ(G)` when `F ≤ G` is declared.
    ZetaMonotonicity { smaller: String, larger: String },
    /// `S(G, F) ≤ sup_s c(sF)`.
    OverlapBound { left: String, right: String },
    /// `Π(F, G) ≤ √(2S(F,G)·‖{F,G}‖∞) ≤ t`.
    PoissonBracket { left: String, right: String },
    /// `|ζ(F+G) - ζ(F) - ζ(G)| ≤ Π(F,G)`.
    Telescoping { ham: String, left: String, right: String },
    /// Solves `L ≤ ζ(H) ≤ c + k·t` for `t`.
    SolveT { ham: String },
    /// `ν_c·πr² = t²/2`.
    NuFromT,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Normalization { .. } => "normalization",
            Rule::EnergyCapacity { .. } => "energy_capacity",
            Rule::DisjointEnergyCapacity => "disjoint_energy_capacity",
            Rule::IterateTriangle { .. } => "iterate_triangle",
            Rule::Nonnegativity { .. } => "nonnegativity",
            Rule::Instantiate { .. } => "instantiate",
            Rule::Certified { .. } => "certified",
            Rule::KillerSupNorm { .. } => "killer_sup_norm",
            Rule::DeclaredSupNorm { .. } => "declared_sup_norm",
            Rule::DisjointSupNorm { .. } => "disjoint_sup_norm",
            Rule::Triangle { .. } => "triangle",
            Rule::Continuity { .. } => "continuity",
            Rule::Intersect => "intersect",
            Rule::TheoremInstance { .. } => "theorem_instance",
            Rule::ZetaOfCapped { .. } => "zeta_of_capped",
            Rule::ZetaNormalization { .. } => "zeta_normalization",
            Rule::ZetaMonotonicity { .. } => "zeta_monotonicity",
            Rule::OverlapBound { .. } => "overlap_bound",
            Rule::PoissonBracket { .. } => "poisson_bracket",
            Rule::Telescoping { .. } => "telescoping",
            Rule::SolveT { .. } => "solve_t",
            Rule::NuFromT => "nu_from_t",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundFact {
    pub fact_id: usize,
    pub quantity: Quantity,
    pub label: String,
    pub interval: Interval,
    pub rule: Rule,
    pub premises: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFailure {
    pub fact_id: usize,
    pub message: String,
}

/// Declarations plus an append-only list of facts.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BoundTrace {
    #[serde(default)]
    pub model: Option<ManifoldModel>,
    #[serde(default)]
    pub balls: Vec<BallDecl>,
    #[serde(default)]
    pub hamiltonians: Vec<AbstractHamiltonian>,
    /// Declared pointwise inequalities `(smaller, larger)`.
    #[serde(default)]
    pub orderings: Vec<(String, String)>,
    /// `πr²` in the definition of `t`.
    #[serde(default)]
    pub t_area: Option<PiRational>,
    pub facts: Vec<BoundFact>,
}

type Conclusion = (Quantity, Interval);

impl BoundTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_ball(&mut self, r: Option<BigRational>, energy: PiRational) -> usize {
        let id = self.balls.len();
        self.balls.push(BallDecl { id, r, energy });
        id
    }

    pub fn declare(&mut self, ham: AbstractHamiltonian) -> Result<(), CalculusError> {
        if self.hamiltonians.iter().any(|h| h.id == ham.id) {
            return Err(CalculusError::Duplicate(ham.id));
        }
        if let Support::Balls(b) = &ham.support {
            if let Some(bad) = b.iter().find(|i| **i >= self.balls.len()) {
                return Err(CalculusError::UnknownBall(*bad));
            }
        }
        self.hamiltonians.push(ham);
        Ok(())
    }

    pub fn ham(&self, id: &str) -> Result<&AbstractHamiltonian, CalculusError> {
        self.hamiltonians
            .iter()
            .find(|h| h.id == id)
            .ok_or_else(|| CalculusError::UnknownHamiltonian(id.to_string()))
    }

    fn ball(&self, id: usize) -> Result<&BallDecl, CalculusError> {
        self.balls.get(id).ok_or(CalculusError::UnknownBall(id))
    }

    pub fn fact(&self, id: usize) -> Result<&BoundFact, CalculusError> {
        self.facts.get(id).ok_or(CalculusError::UnknownFact(id))
    }

    pub fn last(&self) -> Option<&BoundFact> {
        self.facts.last()
    }

    /// Appends the conclusion of `rule` applied to `premises`.
    pub fn apply(&mut self, rule: Rule, premises: &[usize]) -> Result<usize, CalculusError> {
        let (quantity, interval) = self.conclude(&rule, premises, self.facts.len())?;
        let fact_id = self.facts.len();
        self.facts.push(BoundFact {
            fact_id,
            label: quantity.to_string(),
            quantity,
            interval,
            rule,
            premises: premises.to_vec(),
        });
        Ok(fact_id)
    }

    /// Replays every fact from its premises and compares the result exactly.
    pub fn audit(&self) -> Vec<AuditFailure> {
        let mut failures = Vec::new();
        for (i, fact) in self.facts.iter().enumerate() {
            let fail = |message: String| AuditFailure { fact_id: i, message };
            if fact.fact_id != i {
                failures.push(fail(format!("fact id {} out of order", fact.fact_id)));
                continue;
            }
            match self.conclude(&fact.rule, &fact.premises, i) {
                Ok((q, iv)) if q == fact.quantity && iv == fact.interval => {}
                Ok((q, iv)) => failures.push(fail(format!("replay gives {q} ∈ {iv}, trace says {} ∈ {}", fact.quantity, fact.interval))),
                Err(e) => failures.push(fail(e.to_string())),
            }
        }
        failures
    }

    /// Ids of every fact that `id` depends on, including itself, ascending.
    pub fn ancestors(&self, id: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(f) = stack.pop() {
            if seen.insert(f) {
                if let Some(fact) = self.facts.get(f) {
                    stack.extend(fact.premises.iter().copied());
                }
            }
        }
        seen
    }

    /// Multiset of leaf summands, `Zero` contributing nothing.
    fn leaves(&self, id: &str) -> Result<BTreeMap<String, usize>, CalculusError> {
        let mut out = BTreeMap::new();
        let mut stack = vec![id.to_string()];
        let mut guard = 0usize;
        while let Some(h) = stack.pop() {
            guard += 1;
            if guard > 100_000 {
                return Err(schema("sum", "cyclic sum definition"));
            }
            match &self.ham(&h)?.definition {
                Definition::Sum(parts) => stack.extend(parts.iter().cloned()),
                Definition::Zero => {}
                _ => *out.entry(h).or_insert(0) += 1,
            }
        }
        Ok(out)
    }

    fn sum_parts(&self, id: &str, rule: &'static str) -> Result<Vec<String>, CalculusError> {
        match &self.ham(id)?.definition {
            Definition::Sum(parts) => Ok(parts.clone()),
            _ => Err(schema(rule, format!("`{id}` is not declared as a sum"))),
        }
    }

    fn premise_facts(&self, premises: &[usize], before: usize) -> Result<Vec<&BoundFact>, CalculusError> {
        premises
            .iter()
            .map(|p| if *p < before { self.fact(*p) } else { Err(CalculusError::UnknownFact(*p)) })
            .collect()
    }

    fn premise_on<'a>(
        facts: &[&'a BoundFact],
        q: &Quantity,
        rule: &'static str,
    ) -> Result<&'a BoundFact, CalculusError> {
        facts
            .iter()
            .copied()
            .find(|f| &f.quantity == q)
            .ok_or_else(|| CalculusError::MissingPremise(format!("{rule} needs a fact on {q}")))
    }

    fn expect_count(facts: &[&BoundFact], n: usize, rule: &'static str) -> Result<(), CalculusError> {
        if facts.len() != n {
            return Err(schema(rule, format!("expects {n} premises, got {}", facts.len())));
        }
        Ok(())
    }

    fn conclude(&self, rule: &Rule, premises: &[usize], before: usize) -> Result<Conclusion, CalculusError> {
        let facts = self.premise_facts(premises, before)?;
        let name = rule.name();
        match rule {
            Rule::Normalization { ham } => {
                Self::expect_count(&facts, 0, name)?;
                if self.ham(ham)?.definition != Definition::Zero {
                    return Err(schema(name, format!("`{ham}` is not the zero function")));
                }
                Ok((Quantity::Spectral(ham.clone()), Interval::point(PiRational::zero())))
            }
            Rule::EnergyCapacity { ball } => {
                Self::expect_count(&facts, 0, name)?;
                let e = &self.ball(*ball)?.energy;
                if e.is_negative() {
                    return Err(schema(name, "negative energy"));
                }
                Ok((Quantity::SpectralClass(vec![*ball]), Interval::closed(-e, e.clone())))
            }
            Rule::DisjointEnergyCapacity => {
                if facts.is_empty() {
                    return Err(CalculusError::MissingPremise("per-ball class facts".into()));
                }
                let mut union = BTreeSet::new();
                let mut total = PiRational::zero();
                for f in &facts {
                    let Quantity::SpectralClass(b) = &f.quantity else {
                        return Err(schema(name, "premises must be class facts"));
                    };
                    if b.iter().any(|i| !union.insert(*i)) {
                        return Err(schema(name, "classes are not disjoint"));
                    }
                    let (lo, hi) = match (f.interval.lo_const(), f.interval.hi_const()) {
                        (Some(lo), Some(hi)) => (lo, hi),
                        _ => return Err(schema(name, "class bounds must be finite constants")),
                    };
                    if *lo != -hi {
                        return Err(schema(name, "class bounds must be symmetric"));
                    }
                    total += hi;
                }
                let balls: Vec<usize> = union.into_iter().collect();
                Ok((Quantity::SpectralClass(balls), Interval::closed(-&total, total)))
            }
            Rule::IterateTriangle { delta, m } => {
                Self::expect_count(&facts, 1, name)?;
                let Quantity::SpectralClass(b) = &facts[0].quantity else {
                    return Err(schema(name, "premise must be a class fact"));
                };
                if !delta.is_positive() || *m == 0 {
                    return Err(schema(name, "needs δ > 0 and m ≥ 1"));
                }
                let bound = -delta.scale(&BigRational::from_integer(BigInt::from(*m)));
                Ok((Quantity::SpectralIterate { class: b.clone(), m: *m }, Interval::at_most(Bound::constant(bound))))
            }
            Rule::Nonnegativity { delta, m } => {
                Self::expect_count(&facts, 2, name)?;
                let class = &facts[0];
                let Quantity::SpectralClass(b) = &class.quantity else {
                    return Err(schema(name, "first premise must be a class fact"));
                };
                let iter_q = Quantity::SpectralIterate { class: b.clone(), m: *m };
                if facts[1].quantity != iter_q || facts[1].rule != (Rule::IterateTriangle { delta: delta.clone(), m: *m }) {
                    return Err(schema(name, "second premise must be the matching iterate"));
                }
                let (Some(lo), Some(hi)) = (class.interval.lo_const(), class.interval.hi_const()) else {
                    return Err(schema(name, "class needs a two-sided constant bound"));
                };
                let energy = hi.clone().max(-lo);
                let md = delta.scale(&BigRational::from_integer(BigInt::from(*m)));
                if md <= energy.scale_int(2) {
                    return Err(schema(name, "witness fails m·δ > 2E"));
                }
                let iter_hi = facts[1].interval.hi_const().ok_or_else(|| schema(name, "iterate lacks an upper bound"))?;
                if iter_hi >= lo {
                    return Err(schema(name, "iterate bound does not contradict the class lower bound"));
                }
                Ok((class.quantity.clone(), Interval::closed(PiRational::zero(), hi.clone())))
            }
            Rule::Instantiate { ham } => {
                Self::expect_count(&facts, 1, name)?;
                let Quantity::SpectralClass(b) = &facts[0].quantity else {
                    return Err(schema(name, "premise must be a class fact"));
                };
                if !self.ham(ham)?.support.within(b) {
                    return Err(schema(name, format!("`{ham}` is not supported in the class")));
                }
                Ok((Quantity::Spectral(ham.clone()), facts[0].interval.clone()))
            }
            Rule::Certified { ham } => {
                Self::expect_count(&facts, 0, name)?;
                let input = self.certification_input(ham)?;
                let cert = certify(&input).map_err(|e| schema(name, e.to_string()))?;
                if !cert.is_certified() {
                    return Err(schema(name, format!("certifier returned {}", cert.status_label())));
                }
                Ok((Quantity::Spectral(ham.clone()), Interval::point(PiRational::zero())))
            }
            Rule::KillerSupNorm { ham } => {
                Self::expect_count(&facts, 0, name)?;
                let Definition::Killer { ball, epsilon } = &self.ham(ham)?.definition else {
                    return Err(schema(name, format!("`{ham}` is not a killer")));
                };
                let r = self.ball(*ball)?.r.clone().ok_or_else(|| schema(name, "ball radius undeclared"))?;
                let profile = make_killer(&r, epsilon).map_err(|e| schema(name, e.to_string()))?;
                Ok((Quantity::SupNorm(ham.clone()), Interval::point(sup_norm(&profile))))
            }
            Rule::DeclaredSupNorm { ham } => {
                Self::expect_count(&facts, 0, name)?;
                let n = self.ham(ham)?.norm_bound.clone().ok_or_else(|| schema(name, "no declared norm bound"))?;
                Ok((Quantity::SupNorm(ham.clone()), Interval::closed(PiRational::zero(), n)))
            }
            Rule::DisjointSupNorm { ham } => {
                let parts = self.sum_parts(ham, name)?;
                self.check_disjoint(&parts, name)?;
                Self::expect_count(&facts, parts.len(), name)?;
                let mut lo = PiRational::zero();
                let mut hi = PiRational::zero();
                for p in &parts {
                    let f = Self::premise_on(&facts, &Quantity::SupNorm(p.clone()), name)?;
                    let (Some(l), Some(h)) = (f.interval.lo_const(), f.interval.hi_const()) else {
                        return Err(schema(name, "norm bounds must be constants"));
                    };
                    lo = lo.max(l.clone());
                    hi = hi.max(h.clone());
                }
                Ok((Quantity::SupNorm(ham.clone()), Interval::closed(lo, hi)))
            }
            Rule::Triangle { ham } => {
                let parts = self.sum_parts(ham, name)?;
                self.check_disjoint(&parts, name)?;
                Self::expect_count(&facts, parts.len(), name)?;
                let mut total = Bound::constant(PiRational::zero());
                for p in &parts {
                    let f = Self::premise_on(&facts, &Quantity::Spectral(p.clone()), name)?;
                    let hi = f.interval.hi.as_ref().ok_or_else(|| schema(name, format!("no upper bound on c({p})")))?;
                    total = total.add(hi);
                }
                Ok((Quantity::Spectral(ham.clone()), Interval::at_most(total)))
            }
            Rule::Continuity { ham, reference, difference } => {
                Self::expect_count(&facts, 2, name)?;
                let target = self.leaves(ham)?;
                let refr = self.leaves(reference)?;
                let diff = self.leaves(difference)?;
                if merge(&target, &diff) != refr && merge(&refr, &diff) != target {
                    return Err(schema(name, "difference does not relate the two Hamiltonians"));
                }
                let c = Self::premise_on(&facts, &Quantity::Spectral(reference.clone()), name)?;
                let n = Self::premise_on(&facts, &Quantity::SupNorm(difference.clone()), name)?;
                let norm = n.interval.hi.as_ref().ok_or_else(|| schema(name, "norm needs an upper bound"))?;
                let lo = c.interval.lo.as_ref().map(|b| b.add(&norm.neg()));
                let hi = c.interval.hi.as_ref().map(|b| b.add(norm));
                Ok((Quantity::Spectral(ham.clone()), Interval::new(lo, hi)))
            }
            Rule::Intersect => {
                Self::expect_count(&facts, 2, name)?;
                if facts[0].quantity != facts[1].quantity {
                    return Err(schema(name, "premises concern different quantities"));
                }
                let pick = |a: &Option<Bound>, b: &Option<Bound>, upper: bool| -> Result<Option<Bound>, CalculusError> {
                    Ok(match (a, b) {
                        (None, x) | (x, None) => x.clone(),
                        (Some(x), Some(y)) => {
                            let (small, large) = if x.le(y) {
                                (x, y)
                            } else if y.le(x) {
                                (y, x)
                            } else {
                                return Err(schema(name, "bounds are not comparable"));
                            };
                            Some(if upper { small.clone() } else { large.clone() })
                        }
                    })
                };
                let lo = pick(&facts[0].interval.lo, &facts[1].interval.lo, false)?;
                let hi = pick(&facts[0].interval.hi, &facts[1].interval.hi, true)?;
                let iv = Interval::new(lo, hi);
                if !iv.is_nonempty() {
                    return Err(schema(name, "intersection is empty"));
                }
                Ok((facts[0].quantity.clone(), iv))
            }
            Rule::TheoremInstance { ham, area } => {
                Self::expect_count(&facts, 0, name)?;
                if !self.ham(ham)?.has_tag(COLOR_CLASS) {
                    return Err(schema(name, format!("`{ham}` is not a color class")));
                }
                if self.t_area.as_ref() != Some(area) {
                    return Err(schema(name, "area differs from the declared cover area"));
                }
                Ok((Quantity::SpectralScaled(ham.clone()), Interval::closed(PiRational::zero(), area.clone())))
            }
            Rule::ZetaOfCapped { ham } => {
                Self::expect_count(&facts, 1, name)?;
                let f = Self::premise_on(&facts, &Quantity::SpectralScaled(ham.clone()), name)?;
                match (f.interval.lo_const(), f.interval.hi_const()) {
                    (Some(lo), Some(_)) if !lo.is_negative() => {}
                    _ => return Err(schema(name, "needs 0 ≤ c(sF) ≤ C for all s")),
                }
                Ok((Quantity::Zeta(ham.clone()), Interval::point(PiRational::zero())))
            }
            Rule::ZetaNormalization { ham } => {
                Self::expect_count(&facts, 0, name)?;
                let h = self.ham(ham)?;
                let value = match (&h.definition, &h.equals_constant) {
                    (Definition::Constant(c), _) | (_, Some(c)) => c.clone(),
                    (Definition::Zero, None) => PiRational::zero(),
                    _ => return Err(schema(name, format!("`{ham}` is not constant"))),
                };
                Ok((Quantity::Zeta(ham.clone()), Interval::point(value)))
            }
            Rule::ZetaMonotonicity { smaller, larger } => {
                Self::expect_count(&facts, 1, name)?;
                if !self.orderings.iter().any(|(a, b)| a == smaller && b == larger) {
                    return Err(schema(name, format!("`{smaller} ≤ {larger}` is not declared")));
                }
                let f = facts[0];
                if f.quantity == Quantity::Zeta(larger.clone()) {
                    let hi = f.interval.hi.clone().ok_or_else(|| schema(name, "no upper bound to transfer"))?;
                    Ok((Quantity::Zeta(smaller.clone()), Interval::at_most(hi)))
                } else if f.quantity == Quantity::Zeta(smaller.clone()) {
                    let lo = f.interval.lo.clone().ok_or_else(|| schema(name, "no lower bound to transfer"))?;
                    Ok((Quantity::Zeta(larger.clone()), Interval::at_least(lo)))
                } else {
                    Err(schema(name, "premise must be ζ of one side"))
                }
            }
            Rule::OverlapBound { left, right } => {
                Self::expect_count(&facts, 1, name)?;
                self.ham(left)?;
                let f = Self::premise_on(&facts, &Quantity::SpectralScaled(right.clone()), name)?;
                let hi = f.interval.hi.clone().ok_or_else(|| schema(name, "no upper bound on c(sF)"))?;
                Ok((Quantity::Overlap(left.clone(), right.clone()), Interval::at_most(hi)))
            }
            Rule::PoissonBracket { left, right } => {
                Self::expect_count(&facts, 1, name)?;
                let f = Self::premise_on(&facts, &Quantity::Overlap(left.clone(), right.clone()), name)?;
                let area = self.t_area.as_ref().ok_or_else(|| schema(name, "no cover area declared"))?;
                if f.interval.hi_const() != Some(area) {
                    return Err(schema(name, "S bound must equal the cover area"));
                }
                for h in [left, right] {
                    self.ham(h)?;
                }
                Ok((
                    Quantity::Defect(left.clone(), right.clone()),
                    Interval::new(Some(Bound::constant(PiRational::zero())), Some(Bound::t(BigRational::one()))),
                ))
            }
            Rule::Telescoping { ham, left, right } => {
                Self::expect_count(&facts, 3, name)?;
                if self.sum_parts(ham, name)? != [left.clone(), right.clone()] {
                    return Err(schema(name, format!("`{ham}` is not `{left} + {right}`")));
                }
                let l = Self::premise_on(&facts, &Quantity::Zeta(left.clone()), name)?;
                let r = Self::premise_on(&facts, &Quantity::Zeta(right.clone()), name)?;
                let d = Self::premise_on(&facts, &Quantity::Defect(left.clone(), right.clone()), name)?;
                let defect = d.interval.hi.as_ref().ok_or_else(|| schema(name, "Π needs an upper bound"))?;
                let lo = match (&l.interval.lo, &r.interval.lo) {
                    (Some(a), Some(b)) => Some(a.add(b).add(&defect.neg())),
                    _ => None,
                };
                let hi = match (&l.interval.hi, &r.interval.hi) {
                    (Some(a), Some(b)) => Some(a.add(b).add(defect)),
                    _ => None,
                };
                Ok((Quantity::Zeta(ham.clone()), Interval::new(lo, hi)))
            }
            Rule::SolveT { ham } => {
                Self::expect_count(&facts, 2, name)?;
                let q = Quantity::Zeta(ham.clone());
                if facts.iter().any(|f| f.quantity != q) {
                    return Err(schema(name, "premises must both bound ζ of the same function"));
                }
                let upper = facts[0].interval.hi.as_ref().ok_or_else(|| schema(name, "first premise needs an upper bound"))?;
                let lower = facts[1].interval.lo_const().ok_or_else(|| schema(name, "second premise needs a constant lower bound"))?;
                if !upper.t_coeff.is_positive() {
                    return Err(schema(name, "upper bound must grow with t"));
                }
                let gap = lower - &upper.constant;
                if !gap.is_rational() {
                    return Err(schema(name, "bound on t must be rational"));
                }
                let t_lo = gap.rat() / &upper.t_coeff;
                Ok((Quantity::SymbolT, Interval::at_least(Bound::constant(PiRational::from_rational(t_lo)))))
            }
            Rule::NuFromT => {
                Self::expect_count(&facts, 1, name)?;
                if facts[0].quantity != Quantity::SymbolT {
                    return Err(schema(name, "premise must bound t"));
                }
                let lo = facts[0].interval.lo_const().filter(|b| b.is_rational() && !b.is_negative());
                let lo = lo.ok_or_else(|| schema(name, "needs a nonnegative rational lower bound on t"))?;
                let nu = lo.rat() * lo.rat() / rational_from_int(2);
                Ok((Quantity::NuTimesArea, Interval::at_least(Bound::constant(PiRational::from_rational(nu)))))
            }
        }
    }

    fn check_disjoint(&self, parts: &[String], rule: &'static str) -> Result<(), CalculusError> {
        for (i, a) in parts.iter().enumerate() {
            for b in &parts[i + 1..] {
                if !self.ham(a)?.support.disjoint(&self.ham(b)?.support) {
                    return Err(schema(rule, format!("`{a}` and `{b}` are not disjointly supported")));
                }
            }
        }
        Ok(())
    }

    /// `ham` must be `H_i + K_i` with `K_i` a killer on the ball supporting
    /// `H_i`.
    fn certification_input(&self, ham: &str) -> Result<CertificationInput, CalculusError> {
        let name = "certified";
        let parts = self.sum_parts(ham, name)?;
        let mut killer = None;
        let mut others = Vec::new();
        for p in &parts {
            match &self.ham(p)?.definition {
                Definition::Killer { ball, epsilon } => killer = Some((*ball, epsilon.clone())),
                _ => others.push(p),
            }
        }
        let (ball, epsilon) = killer.ok_or_else(|| schema(name, "no killer summand"))?;
        let single = [ball];
        if others.len() != 1 || !self.ham(others[0])?.support.within(&single) {
            return Err(schema(name, "expects one Hamiltonian supported in the killer's ball"));
        }
        let model = self.model.clone().ok_or_else(|| schema(name, "no manifold model declared"))?;
        let decl = self.ball(ball)?;
        let r = decl.r.clone().ok_or_else(|| schema(name, "ball radius undeclared"))?;
        Ok(CertificationInput::new(model, r, epsilon, decl.energy.clone()))
    }
}

fn merge(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> BTreeMap<String, usize> {
    let mut out = a.clone();
    for (k, v) in b {
        *out.entry(k.clone()).or_insert(0) += v;
    }
    out
}

/// Witness for the nonnegativity argument: `m = ⌊2E/δ⌋ + 1`.
pub fn nonneg_witness(energy: &PiRational, delta: &PiRational) -> Result<u64, CalculusError> {
    let m = energy.scale_int(2).floor_div(delta)? + 1;
    u64::try_from(m).map_err(|_| CalculusError::Exact(ExactError::Overflow("nonnegativity witness".into())))
}

impl BoundTrace {
    /// Lifts a two-sided class fact `|c| ≤ E` to `0 ≤ c ≤ E`. `delta` is the
    /// hypothetical deficit; the default is `E/2` (or `1` when `E = 0`).
    pub fn derive_nonneg(&mut self, class_fact: usize, delta: Option<PiRational>) -> Result<usize, CalculusError> {
        let fact = self.fact(class_fact)?;
        if !matches!(fact.quantity, Quantity::SpectralClass(_)) {
            return Err(CalculusError::MissingPremise("a class fact c ≤ E".into()));
        }
        let energy = match (fact.interval.lo_const(), fact.interval.hi_const()) {
            (Some(lo), Some(hi)) => hi.clone().max(-lo),
            _ => return Err(CalculusError::MissingPremise("two-sided bound on the class".into())),
        };
        let delta = delta.unwrap_or_else(|| {
            if energy.is_zero() {
                PiRational::from_int(1)
            } else {
                energy.div_rational(&rational_from_int(2)).expect("nonzero divisor")
            }
        });
        let m = nonneg_witness(&energy, &delta)?;
        let iterate = self.apply(Rule::IterateTriangle { delta: delta.clone(), m }, &[class_fact])?;
        self.apply(Rule::Nonnegativity { delta, m }, &[class_fact, iterate])
    }
}

/// Standalone trace for one displaceable set with energy `E`.
pub fn derive_nonneg(energy: PiRational, delta: Option<PiRational>) -> Result<BoundTrace, CalculusError> {
    let mut trace = BoundTrace::new();
    let ball = trace.declare_ball(None, energy);
    let class = trace.apply(Rule::EnergyCapacity { ball }, &[])?;
    trace.derive_nonneg(class, delta)?;
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallSpec {
    pub r: BigRational,
    /// `None` means `πr²`.
    pub energy: Option<PiRational>,
    /// `None` means `r/8`.
    pub epsilon: Option<BigRational>,
}

impl BallSpec {
    pub fn new(r: BigRational) -> Self {
        Self { r, energy: None, epsilon: None }
    }

    pub fn energy(&self) -> PiRational {
        self.energy.clone().unwrap_or_else(|| ball_area(&self.r))
    }

    pub fn epsilon(&self) -> BigRational {
        self.epsilon.clone().unwrap_or_else(|| &self.r / rational_from_int(8))
    }
}

pub fn check_balls(balls: &[BallSpec], model: &ManifoldModel) -> Vec<BallViolation> {
    let mut out = Vec::new();
    let half_lambda = PiRational::from_rational(model.lambda.abs() / rational_from_int(2));
    for (i, b) in balls.iter().enumerate() {
        let mut bad = |m: String| out.push(BallViolation { ball: i, message: m });
        if !b.r.is_positive() {
            bad("radius must be positive".into());
            continue;
        }
        let e = b.energy();
        if model.mode == ManifoldMode::Monotone {
            if e < ball_area(&b.r) {
                bad(format!("requires πr² ≤ E, got E = {e}"));
            }
            if e >= half_lambda {
                bad(format!("requires E < |λ|/2, got E = {e}"));
            }
        } else if !e.is_positive() {
            bad("energy bound must be positive".into());
        }
        let eps = b.epsilon();
        if !eps.is_positive() || &eps * rational_from_int(4) >= b.r {
            bad("epsilon must satisfy 0 < epsilon < r/4".into());
        }
    }
    out
}

/// Full trace of `0 ≤ c(H) ≤ π·max r_i²` for `H` supported in disjoint balls.
pub fn derive_theorem_bound(balls: &[BallSpec], model: &ManifoldModel) -> Result<BoundTrace, CalculusError> {
    if balls.is_empty() {
        return Err(CalculusError::MissingPremise("at least one ball".into()));
    }
    let violations = check_balls(balls, model);
    if !violations.is_empty() {
        return Err(CalculusError::Preconditions(violations));
    }
    let k = balls.len();
    let mut t = BoundTrace::new();
    t.model = Some(model.clone());
    for b in balls {
        t.declare_ball(Some(b.r.clone()), b.energy());
    }
    let all = || Support::balls(0..k);
    let mut h_parts = Vec::new();
    let mut k_parts = Vec::new();
    let mut hk_parts = Vec::new();
    for (i, b) in balls.iter().enumerate() {
        let (h, kk, hk) = (format!("H{i}"), format!("K{i}"), format!("H{i}+K{i}"));
        t.declare(AbstractHamiltonian::atom(&h, Support::balls([i])))?;
        t.declare(AbstractHamiltonian {
            definition: Definition::Killer { ball: i, epsilon: b.epsilon() },
            ..AbstractHamiltonian::atom(&kk, Support::balls([i]))
        }.with_tag("killer"))?;
        t.declare(AbstractHamiltonian::sum(&hk, Support::balls([i]), &[&h, &kk]))?;
        h_parts.push(h);
        k_parts.push(kk);
        hk_parts.push(hk);
    }
    let h_sum: Vec<&str> = h_parts.iter().map(String::as_str).collect();
    let k_sum: Vec<&str> = k_parts.iter().map(String::as_str).collect();
    let hk_sum: Vec<&str> = hk_parts.iter().map(String::as_str).collect();
    t.declare(AbstractHamiltonian::sum("H", all(), &h_sum))?;
    t.declare(AbstractHamiltonian::sum("K", all(), &k_sum))?;
    t.declare(AbstractHamiltonian::sum("H+K", all(), &hk_sum))?;

    let per_ball: Vec<usize> = (0..k).map(|ball| t.apply(Rule::EnergyCapacity { ball }, &[])).collect::<Result<_, _>>()?;
    let union = t.apply(Rule::DisjointEnergyCapacity, &per_ball)?;
    let nonneg = t.derive_nonneg(union, None)?;

    let certs: Vec<usize> = hk_parts
        .iter()
        .map(|ham| t.apply(Rule::Certified { ham: ham.clone() }, &[]))
        .collect::<Result<_, _>>()?;
    let upper = t.apply(Rule::Triangle { ham: "H+K".into() }, &certs)?;
    let lower = t.apply(Rule::Instantiate { ham: "H+K".into() }, &[nonneg])?;
    let zero = t.apply(Rule::Intersect, &[upper, lower])?;

    let norms: Vec<usize> = k_parts
        .iter()
        .map(|ham| t.apply(Rule::KillerSupNorm { ham: ham.clone() }, &[]))
        .collect::<Result<_, _>>()?;
    let norm = t.apply(Rule::DisjointSupNorm { ham: "K".into() }, &norms)?;
    let cont = t.apply(
        Rule::Continuity { ham: "H".into(), reference: "H+K".into(), difference: "K".into() },
        &[zero, norm],
    )?;
    let h_nonneg = t.apply(Rule::Instantiate { ham: "H".into() }, &[nonneg])?;
    t.apply(Rule::Intersect, &[cont, h_nonneg])?;
    Ok(t)
}

/// `ζ(F) = 0` for a color class with `0 ≤ c(sF) ≤ area`; returns the trace
/// and the id of the `ζ` fact.
pub fn zeta_of_capped_family(area: PiRational) -> Result<(BoundTrace, usize), CalculusError> {
    let mut t = BoundTrace::new();
    t.t_area = Some(area.clone());
    t.declare(AbstractHamiltonian::atom("F", Support::Global).with_tag(COLOR_CLASS))?;
    let capped = t.apply(Rule::TheoremInstance { ham: "F".into(), area }, &[])?;
    let z = t.apply(Rule::ZetaOfCapped { ham: "F".into() }, &[capped])?;
    Ok((t, z))
}

/// Lower bound `ν_c ≥ c_d / (πr²)` with `c_d = 1/(2d²)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PbLowerBound {
    pub d: u32,
    #[serde(with = "crate::exact::rational_string")]
    pub c_d: BigRational,
    pub pi_r_sq: PiRational,
}

impl PbLowerBound {
    /// `bound · πr²`, exact.
    pub fn times_area(&self) -> BigRational {
        self.c_d.clone()
    }

    pub fn value(&self) -> f64 {
        crate::exact::rational_to_f64(&self.c_d) / self.pi_r_sq.to_f64()
    }
}

/// Telescoping chain `1 = ζ(G_{d+1}) ≤ d·t`, hence `ν_c·πr² ≥ 1/(2d²)`.
pub fn pb_lower_bound(d: u32, pi_r_sq: PiRational) -> Result<(PbLowerBound, BoundTrace), CalculusError> {
    if d == 0 {
        return Err(schema("pb_lower_bound", "d must be at least 1"));
    }
    if !pi_r_sq.is_positive() {
        return Err(schema("pb_lower_bound", "area must be positive"));
    }
    let mut t = BoundTrace::new();
    t.t_area = Some(pi_r_sq.clone());
    let f = |j: u32| format!("F{j}");
    let g = |k: u32| if k == 1 { f(1) } else { format!("G{k}") };
    for j in 1..=d + 1 {
        t.declare(AbstractHamiltonian::atom(&f(j), Support::Global).with_tag(COLOR_CLASS))?;
    }
    for k in 2..=d + 1 {
        let mut decl = AbstractHamiltonian::sum(&g(k), Support::Global, &[&g(k - 1), &f(k)]);
        if k == d + 1 {
            decl.equals_constant = Some(PiRational::from_int(1));
            decl.tags.push("partition-of-unity".into());
        }
        t.declare(decl)?;
    }
    let mut scaled = Vec::new();
    let mut zeta = Vec::new();
    for j in 1..=d + 1 {
        let s = t.apply(Rule::TheoremInstance { ham: f(j), area: pi_r_sq.clone() }, &[])?;
        zeta.push(t.apply(Rule::ZetaOfCapped { ham: f(j) }, &[s])?);
        scaled.push(s);
    }
    let mut running = zeta[0];
    for k in 1..=d {
        let (left, right) = (g(k), f(k + 1));
        let overlap = t.apply(Rule::OverlapBound { left: left.clone(), right: right.clone() }, &[scaled[k as usize]])?;
        let defect = t.apply(Rule::PoissonBracket { left: left.clone(), right: right.clone() }, &[overlap])?;
        running = t.apply(Rule::Telescoping { ham: g(k + 1), left, right }, &[running, zeta[k as usize], defect])?;
    }
    let one = t.apply(Rule::ZetaNormalization { ham: g(d + 1) }, &[])?;
    let t_bound = t.apply(Rule::SolveT { ham: g(d + 1) }, &[running, one])?;
    t.apply(Rule::NuFromT, &[t_bound])?;
    let c_d = BigRational::new(BigInt::one(), BigInt::from(2u64 * u64::from(d) * u64::from(d)));
    Ok((PbLowerBound { d, c_d, pi_r_sq }, t))
}

/// `pb_lower_bound` for a radius given as a rational.
pub fn pb_lower_bound_radius(d: u32, r: &BigRational) -> Result<(PbLowerBound, BoundTrace), CalculusError> {
    pb_lower_bound(d, ball_area(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_rational;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn model() -> ManifoldModel {
        ManifoldModel::monotone(1, q("-1"), 1).unwrap()
    }

    #[test]
    fn normalization_and_triangle() {
        let mut t = BoundTrace::new();
        let b0 = t.declare_ball(Some(q("0.1")), PiRational::parse("0.2").unwrap());
        let b1 = t.declare_ball(Some(q("0.1")), PiRational::parse("0.3").unwrap());
        t.declare(AbstractHamiltonian { definition: Definition::Zero, ..AbstractHamiltonian::atom("0", Support::Global) }).unwrap();
        t.declare(AbstractHamiltonian::atom("H1", Support::balls([b0]))).unwrap();
        t.declare(AbstractHamiltonian::atom("H2", Support::balls([b1]))).unwrap();
        t.declare(AbstractHamiltonian::sum("H1+H2", Support::balls([b0, b1]), &["H1", "H2"])).unwrap();

        let z = t.apply(Rule::Normalization { ham: "0".into() }, &[]).unwrap();
        assert_eq!(t.fact(z).unwrap().interval, Interval::point(PiRational::zero()));

        let c0 = t.apply(Rule::EnergyCapacity { ball: b0 }, &[]).unwrap();
        let c1 = t.apply(Rule::EnergyCapacity { ball: b1 }, &[]).unwrap();
        let h1 = t.apply(Rule::Instantiate { ham: "H1".into() }, &[c0]).unwrap();
        let h2 = t.apply(Rule::Instantiate { ham: "H2".into() }, &[c1]).unwrap();
        let s = t.apply(Rule::Triangle { ham: "H1+H2".into() }, &[h1, h2]).unwrap();
        assert_eq!(t.fact(s).unwrap().interval.hi_const(), Some(&PiRational::parse("0.5").unwrap()));
        assert!(t.audit().is_empty());
    }

    #[test]
    fn triangle_rejects_overlapping_supports() {
        let mut t = BoundTrace::new();
        let b = t.declare_ball(Some(q("0.1")), PiRational::parse("0.2").unwrap());
        t.declare(AbstractHamiltonian::atom("A", Support::balls([b]))).unwrap();
        t.declare(AbstractHamiltonian::atom("B", Support::balls([b]))).unwrap();
        t.declare(AbstractHamiltonian::sum("A+B", Support::balls([b]), &["A", "B"])).unwrap();
        let c = t.apply(Rule::EnergyCapacity { ball: b }, &[]).unwrap();
        let a = t.apply(Rule::Instantiate { ham: "A".into() }, &[c]).unwrap();
        let bb = t.apply(Rule::Instantiate { ham: "B".into() }, &[c]).unwrap();
        let err = t.apply(Rule::Triangle { ham: "A+B".into() }, &[a, bb]).unwrap_err();
        assert!(matches!(err, CalculusError::Schema { rule: "triangle", .. }));
    }

    #[test]
    fn nonneg_witness_for_half_energy() {
        let e = PiRational::parse("0.4").unwrap();
        let delta = e.div_rational(&q("2")).unwrap();
        assert_eq!(nonneg_witness(&e, &delta).unwrap(), 5);
        let trace = derive_nonneg(e.clone(), None).unwrap();
        let last = trace.last().unwrap();
        assert_eq!(last.interval, Interval::closed(PiRational::zero(), e));
        assert!(matches!(last.rule, Rule::Nonnegativity { m: 5, .. }));
        assert!(trace.audit().is_empty());
    }

    #[test]
    fn nonneg_with_zero_energy_collapses() {
        let trace = derive_nonneg(PiRational::zero(), None).unwrap();
        assert_eq!(trace.last().unwrap().interval, Interval::point(PiRational::zero()));
        assert!(trace.audit().is_empty());
    }

    #[test]
    fn nonneg_rejects_bad_witness() {
        let mut t = BoundTrace::new();
        let b = t.declare_ball(None, PiRational::from_int(1));
        let c = t.apply(Rule::EnergyCapacity { ball: b }, &[]).unwrap();
        let delta = PiRational::parse("0.5").unwrap();
        let it = t.apply(Rule::IterateTriangle { delta: delta.clone(), m: 4 }, &[c]).unwrap();
        assert!(t.apply(Rule::Nonnegativity { delta, m: 4 }, &[c, it]).is_err());
    }

    #[test]
    fn theorem_bound_three_balls() {
        let balls: Vec<BallSpec> = ["0.2", "0.3", "0.25"].iter().map(|r| BallSpec::new(q(r))).collect();
        let t = derive_theorem_bound(&balls, &model()).unwrap();
        let last = t.last().unwrap();
        assert_eq!(last.quantity, Quantity::Spectral("H".into()));
        assert_eq!(last.interval, Interval::closed(PiRational::zero(), PiRational::pi_multiple(q("0.09"))));
        assert!(t.audit().is_empty());
        let anc = t.ancestors(last.fact_id);
        assert!(anc.iter().any(|i| matches!(t.facts[*i].rule, Rule::Nonnegativity { .. })));
    }

    #[test]
    fn theorem_bound_single_ball() {
        let t = derive_theorem_bound(&[BallSpec::new(q("0.3"))], &model()).unwrap();
        assert_eq!(t.last().unwrap().interval, Interval::closed(PiRational::zero(), ball_area(&q("0.3"))));
    }

    #[test]
    fn theorem_bound_reports_bad_ball() {
        let mut balls: Vec<BallSpec> = ["0.2", "0.3"].iter().map(|r| BallSpec::new(q(r))).collect();
        balls[1].energy = Some(PiRational::parse("0.5").unwrap());
        match derive_theorem_bound(&balls, &model()) {
            Err(CalculusError::Preconditions(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].ball, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn audit_detects_tampering() {
        let balls = vec![BallSpec::new(q("0.2"))];
        let mut t = derive_theorem_bound(&balls, &model()).unwrap();
        let last = t.facts.len() - 1;
        t.facts[last].interval = Interval::closed(PiRational::zero(), PiRational::pi_multiple(q("0.01")));
        t.facts[last].interval.hi = Some(Bound::constant(PiRational::pi_multiple(q("0.02"))));
        let failures = t.audit();
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].fact_id, last);
    }

    #[test]
    fn zeta_rules() {
        let (t, z) = zeta_of_capped_family(PiRational::pi_multiple(q("0.04"))).unwrap();
        assert_eq!(t.fact(z).unwrap().interval, Interval::point(PiRational::zero()));

        let mut t = BoundTrace::new();
        t.declare(AbstractHamiltonian {
            definition: Definition::Constant(PiRational::parse("3/7").unwrap()),
            ..AbstractHamiltonian::atom("C", Support::Global)
        })
        .unwrap();
        let c = t.apply(Rule::ZetaNormalization { ham: "C".into() }, &[]).unwrap();
        assert_eq!(t.fact(c).unwrap().interval, Interval::point(PiRational::parse("3/7").unwrap()));

        t.declare(AbstractHamiltonian::atom("F", Support::Global)).unwrap();
        t.orderings.push(("F".into(), "C".into()));
        let m = t.apply(Rule::ZetaMonotonicity { smaller: "F".into(), larger: "C".into() }, &[c]).unwrap();
        assert_eq!(t.fact(m).unwrap().interval.hi_const(), Some(&PiRational::parse("3/7").unwrap()));
        assert!(t.apply(Rule::ZetaMonotonicity { smaller: "C".into(), larger: "F".into() }, &[c]).is_err());
    }

    #[test]
    fn pb_constant_examples() {
        let (b, t) = pb_lower_bound(1, PiRational::from_int(1)).unwrap();
        assert_eq!(b.value(), 0.5);
        assert!(t.audit().is_empty());
        assert_eq!(t.last().unwrap().interval.lo_const(), Some(&PiRational::parse("1/2").unwrap()));

        let (b, t) = pb_lower_bound_radius(3, &q("0.2")).unwrap();
        assert!((b.value() - 0.442097064).abs() < 1e-9);
        assert_eq!(b.times_area() * rational_from_int(18), BigRational::one());
        assert_eq!(t.last().unwrap().interval.lo_const(), Some(&PiRational::parse("1/18").unwrap()));
        assert!(t.audit().is_empty());
    }

    #[test]
    fn pb_bound_decreases() {
        let v = |d, r| pb_lower_bound_radius(d, &q(r)).unwrap().0.value();
        assert!(v(2, "0.2") < v(1, "0.2"));
        assert!(v(2, "0.3") < v(2, "0.2"));
    }

    #[test]
    fn trace_round_trips_through_json() {
        let t = derive_theorem_bound(&[BallSpec::new(q("0.2")), BallSpec::new(q("0.25"))], &model()).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: BoundTrace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        assert!(back.audit().is_empty());
        let (_, pb) = pb_lower_bound(4, PiRational::pi_multiple(q("0.01"))).unwrap();
        let back: BoundTrace = serde_json::from_str(&serde_json::to_string(&pb).unwrap()).unwrap();
        assert_eq!(back, pb);
    }
}
