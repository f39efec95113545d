//! Actions and Conley–Zehnder indices of capped 1-periodic orbits of a radial
//! profile on a monotone (or aspherical) manifold model.
//!
//! The sphere group acting on cappings is modeled by the single integer
//! `c₁(A) ∈ Nℤ`. Gluing a sphere `A` shifts the index by `-2c₁(A)` and the
//! action by `-ω(A) = -λc₁(A)`.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{divisible, format_rational, rational_from_int, PiRational};
use crate::radial::{Concavity, OrbitCircle};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtlasError {
    #[error("half-dimension n must be positive")]
    ZeroDimension,
    #[error("minimal Chern number N must be positive")]
    ZeroChernGenerator,
    #[error("monotonicity constant λ must be nonzero in monotone mode")]
    ZeroLambda,
    #[error("Morse index {index} outside [0, {max}]")]
    MorseIndexOutOfRange { index: i64, max: i64 },
    #[error("branch must be 1 or 2, got {0}")]
    InvalidBranch(i64),
    #[error("c1 = {c1} is not a multiple of the minimal Chern number {n}")]
    NotInChernLattice { c1: i64, n: i64 },
    #[error("recapping by c1 = {0} is impossible on an aspherical manifold")]
    AsphericalRecap(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldMode {
    Monotone,
    Aspherical,
}

/// Monotone model `ω|π₂ = λ c₁|π₂` of half-dimension `n` with `c₁(π₂) = Nℤ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldModel {
    pub n: u32,
    #[serde(with = "crate::exact::rational_string")]
    pub lambda: BigRational,
    pub chern_gen: u32,
    pub mode: ManifoldMode,
}

impl ManifoldModel {
    pub fn monotone(n: u32, lambda: BigRational, chern_gen: u32) -> Result<Self, AtlasError> {
        let model = Self { n, lambda, chern_gen, mode: ManifoldMode::Monotone };
        model.validate()?;
        Ok(model)
    }

    /// `ω` vanishes on spheres; λ is stored as zero.
    pub fn aspherical(n: u32) -> Result<Self, AtlasError> {
        let model = Self { n, lambda: BigRational::zero(), chern_gen: 1, mode: ManifoldMode::Aspherical };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), AtlasError> {
        if self.n == 0 {
            return Err(AtlasError::ZeroDimension);
        }
        if self.chern_gen == 0 {
            return Err(AtlasError::ZeroChernGenerator);
        }
        if self.mode == ManifoldMode::Monotone && self.lambda.is_zero() {
            return Err(AtlasError::ZeroLambda);
        }
        Ok(())
    }

    pub fn n(&self) -> i64 {
        self.n as i64
    }

    /// λ as used in actions; zero on aspherical manifolds.
    pub fn effective_lambda(&self) -> BigRational {
        match self.mode {
            ManifoldMode::Monotone => self.lambda.clone(),
            ManifoldMode::Aspherical => BigRational::zero(),
        }
    }

    /// Whether a sphere class with this Chern number exists in the model.
    pub fn admits_c1(&self, c1: i64) -> bool {
        match self.mode {
            ManifoldMode::Monotone => divisible(c1, self.chern_gen as i64),
            ManifoldMode::Aspherical => c1 == 0,
        }
    }

    fn check_c1(&self, c1: i64) -> Result<(), AtlasError> {
        match self.mode {
            ManifoldMode::Aspherical if c1 != 0 => Err(AtlasError::AsphericalRecap(c1)),
            _ if !self.admits_c1(c1) => Err(AtlasError::NotInChernLattice { c1, n: self.chern_gen as i64 }),
            _ => Ok(()),
        }
    }
}

/// Which critical point of the perturbing Morse function on the orbit sphere
/// the orbit comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    /// Minimum of the perturbation.
    #[serde(rename = "1")]
    Min,
    /// Maximum of the perturbation.
    #[serde(rename = "2")]
    Max,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Min, Branch::Max];

    pub fn number(self) -> u8 {
        match self {
            Branch::Min => 1,
            Branch::Max => 2,
        }
    }
}

impl TryFrom<i64> for Branch {
    type Error = AtlasError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(Branch::Min),
            2 => Ok(Branch::Max),
            other => Err(AtlasError::InvalidBranch(other)),
        }
    }
}

/// Action `base + λ_coeff·λ`, kept symbolic in λ.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Action {
    pub base: PiRational,
    pub lambda_coeff: i64,
}

impl Action {
    pub fn new(base: PiRational) -> Self {
        Self { base, lambda_coeff: 0 }
    }

    pub fn value(&self, model: &ManifoldModel) -> PiRational {
        &self.base + PiRational::from_rational(model.effective_lambda() * rational_from_int(self.lambda_coeff))
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            rat: String,
            pi: String,
            lambda: i64,
        }
        Repr {
            rat: format_rational(self.base.rat()),
            pi: format_rational(self.base.pi_coeff()),
            lambda: self.lambda_coeff,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            rat: String,
            pi: String,
            lambda: i64,
        }
        let r = Repr::deserialize(deserializer)?;
        let rat = crate::exact::parse_rational(&r.rat).map_err(serde::de::Error::custom)?;
        let pi = crate::exact::parse_rational(&r.pi).map_err(serde::de::Error::custom)?;
        Ok(Action { base: PiRational::new(rat, pi), lambda_coeff: r.lambda })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OrbitKind {
    /// Constant orbit at a critical point of a plateau perturbation.
    Trivial { plateau_id: String, morse_index: u32 },
    Circle { circle: OrbitCircle, branch: Branch },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CappedOrbitClass {
    pub kind: OrbitKind,
    pub c1: i64,
    pub action: Action,
    pub index: i64,
}

/// Flat wire form of an orbit class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitRow {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plateau_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub circle: Option<CircleRow>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub branch: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub morse_index: Option<u32>,
    pub c1: i64,
    pub action: Action,
    pub index: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleRow {
    #[serde(with = "crate::exact::rational_string")]
    pub s: BigRational,
    pub l: i64,
    pub concavity: Concavity,
}

impl From<&CappedOrbitClass> for OrbitRow {
    fn from(o: &CappedOrbitClass) -> Self {
        match &o.kind {
            OrbitKind::Trivial { plateau_id, morse_index } => OrbitRow {
                kind: "trivial".into(),
                plateau_id: Some(plateau_id.clone()),
                circle: None,
                branch: None,
                morse_index: Some(*morse_index),
                c1: o.c1,
                action: o.action.clone(),
                index: o.index,
            },
            OrbitKind::Circle { circle, branch } => OrbitRow {
                kind: "circle".into(),
                plateau_id: None,
                circle: Some(CircleRow { s: circle.s_star.clone(), l: circle.l, concavity: circle.concavity }),
                branch: Some(branch.number()),
                morse_index: None,
                c1: o.c1,
                action: o.action.clone(),
                index: o.index,
            },
        }
    }
}

impl CappedOrbitClass {
    /// Winding number for circles, 0 for constant orbits.
    pub fn winding(&self) -> i64 {
        match &self.kind {
            OrbitKind::Circle { circle, .. } => circle.l,
            OrbitKind::Trivial { .. } => 0,
        }
    }

    /// Constant orbit on a plateau of value `plateau_value` with trivial capping.
    pub fn trivial(
        plateau_id: &str,
        plateau_value: PiRational,
        morse_index: u32,
        model: &ManifoldModel,
    ) -> Result<Self, AtlasError> {
        let index = trivial_index(morse_index as i64, model, 0)?;
        Ok(Self {
            kind: OrbitKind::Trivial { plateau_id: plateau_id.to_string(), morse_index },
            c1: 0,
            action: Action::new(plateau_value),
            index,
        })
    }

    /// Perturbed orbit on a circle with the capping disc inside the ball.
    pub fn circle(circle: OrbitCircle, branch: Branch, model: &ManifoldModel) -> Self {
        let index = circle_index(&circle, branch, model, 0);
        let action = Action::new(base_action_circle(&circle));
        Self { kind: OrbitKind::Circle { circle, branch }, c1: 0, action, index }
    }

    pub fn action_value(&self, model: &ManifoldModel) -> PiRational {
        self.action.value(model)
    }
}

/// `f(s*) - 2πl·s*`, the action of a circle orbit with its capping in the ball.
pub fn base_action_circle(c: &OrbitCircle) -> PiRational {
    &c.f_value - PiRational::pi_multiple(&c.s_star * rational_from_int(2 * c.l))
}

/// `i_Morse - n - 2c₁`.
pub fn trivial_index(morse_index: i64, model: &ManifoldModel, c1: i64) -> Result<i64, AtlasError> {
    let max = 2 * model.n();
    if !(0..=max).contains(&morse_index) {
        return Err(AtlasError::MorseIndexOutOfRange { index: morse_index, max });
    }
    Ok(morse_index - model.n() - 2 * c1)
}

/// Index of a perturbed circle orbit before recapping.
pub fn circle_base_index(l: i64, concavity: Concavity, branch: Branch, n: i64) -> i64 {
    let winding = -2 * l * n;
    match (branch, concavity) {
        (Branch::Min, Concavity::Convex) => winding - n,
        (Branch::Min, Concavity::Concave) => winding - n + 1,
        (Branch::Max, Concavity::Convex) => winding + n - 1,
        (Branch::Max, Concavity::Concave) => winding + n,
    }
}

pub fn circle_index(c: &OrbitCircle, branch: Branch, model: &ManifoldModel, c1: i64) -> i64 {
    circle_base_index(c.l, c.concavity, branch, model.n()) - 2 * c1
}

/// Glues a sphere with Chern number `a_c1` onto the capping.
pub fn recap(o: &CappedOrbitClass, a_c1: i64, model: &ManifoldModel) -> Result<CappedOrbitClass, AtlasError> {
    if a_c1 == 0 {
        return Ok(o.clone());
    }
    model.check_c1(a_c1)?;
    Ok(CappedOrbitClass {
        kind: o.kind.clone(),
        c1: o.c1 + a_c1,
        action: Action { base: o.action.base.clone(), lambda_coeff: o.action.lambda_coeff - a_c1 },
        index: o.index - 2 * a_c1,
    })
}

/// All `(branch, c₁)` with `circle_index = n` and `c₁` realized by the model.
pub fn index_n_solutions(c: &OrbitCircle, model: &ManifoldModel) -> Vec<(Branch, i64)> {
    let n = model.n();
    Branch::BOTH
        .iter()
        .filter_map(|&branch| {
            let excess = circle_base_index(c.l, c.concavity, branch, n) - n;
            if excess % 2 != 0 {
                return None;
            }
            let c1 = excess / 2;
            model.admits_c1(c1).then_some((branch, c1))
        })
        .collect()
}
