//! Piecewise-linear radial profiles in the area coordinate `s = |z|²/2`.
//!
//! A radial Hamiltonian `F(z) = f(|z|²/2)` is stored as the node list of `f`.
//! In this coordinate the non-constant 1-periodic orbits sit where
//! `f'(s) = 2πl` for a nonzero integer `l`. On a piecewise-linear profile the
//! slope only changes at nodes, so every such orbit family is pinned to a
//! corner node (see [`orbit_circles`]).

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{bigint_to_i64, ceil_div, rational_from_int, ExactError, PiRational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("profile has no nodes")]
    Empty,
    #[error("node abscissae must be strictly increasing (node {0})")]
    NotIncreasing(usize),
    #[error("first node lies at negative s")]
    NegativeAbscissa,
    #[error("last node must have value 0 (compact support)")]
    NonzeroTail,
    #[error("node {0} has an irrational abscissa; only rational s is supported")]
    IrrationalAbscissa(usize),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Area coordinate of the radius `r - k·ε`: `(r - kε)²/2`.
pub fn shell_abscissa(r: &BigRational, eps: &BigRational, k: i64) -> BigRational {
    let radius = r - eps * rational_from_int(k);
    &radius * &radius / rational_from_int(2)
}

/// `πr²` as an exact value.
pub fn ball_area(r: &BigRational) -> PiRational {
    PiRational::pi_multiple(r * r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileNode {
    #[serde(with = "abscissa")]
    pub s: BigRational,
    pub value: PiRational,
}

/// `s` shares the `{rat, pi}` wire form of values but must be rational.
mod abscissa {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &BigRational, serializer: S) -> Result<S::Ok, S::Error> {
        PiRational::from_rational(s.clone()).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<BigRational, D::Error> {
        let v = PiRational::deserialize(deserializer)?;
        if !v.is_rational() {
            return Err(serde::de::Error::custom("node abscissa must have a zero π part"));
        }
        Ok(v.rat().clone())
    }
}

/// Exact piecewise-linear profile `f`, constant beyond its first and last nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RadialProfile {
    nodes: Vec<ProfileNode>,
}

impl<'de> Deserialize<'de> for RadialProfile {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            nodes: Vec<ProfileNode>,
        }
        let raw = Raw::deserialize(deserializer)?;
        RadialProfile::new(raw.nodes).map_err(serde::de::Error::custom)
    }
}

impl RadialProfile {
    pub fn new(nodes: Vec<ProfileNode>) -> Result<Self, ProfileError> {
        let first = nodes.first().ok_or(ProfileError::Empty)?;
        if first.s.is_negative() {
            return Err(ProfileError::NegativeAbscissa);
        }
        for (i, pair) in nodes.windows(2).enumerate() {
            if pair[1].s <= pair[0].s {
                return Err(ProfileError::NotIncreasing(i + 1));
            }
        }
        if !nodes.last().map(|n| n.value.is_zero()).unwrap_or(false) {
            return Err(ProfileError::NonzeroTail);
        }
        Ok(Self { nodes })
    }

    /// Builds from `(s, value)` pairs.
    pub fn from_pairs(pairs: Vec<(BigRational, PiRational)>) -> Result<Self, ProfileError> {
        Self::new(pairs.into_iter().map(|(s, value)| ProfileNode { s, value }).collect())
    }

    pub fn zero() -> Self {
        Self { nodes: vec![ProfileNode { s: BigRational::zero(), value: PiRational::zero() }] }
    }

    pub fn nodes(&self) -> &[ProfileNode] {
        &self.nodes
    }

    /// Adds a constant to every value. The result no longer vanishes at
    /// infinity, so it is returned as a raw node list.
    pub fn shifted_nodes(&self, shift: &PiRational) -> Vec<ProfileNode> {
        self.nodes
            .iter()
            .map(|n| ProfileNode { s: n.s.clone(), value: &n.value + shift })
            .collect()
    }

    /// Exact value `f(s)`. Nodes are closed: `f(s_i)` is the node value.
    pub fn evaluate(&self, s: &BigRational) -> PiRational {
        evaluate_nodes(&self.nodes, s)
    }

    /// Slope of the segment between node `i` and node `i + 1`; zero outside
    /// the node range.
    pub fn segment_slope(&self, i: usize) -> PiRational {
        segment_slope(&self.nodes, i)
    }

    pub fn corners(&self) -> Vec<Corner> {
        corners_of(&self.nodes)
    }

    /// `max |f|`, attained at a node.
    pub fn sup_norm(&self) -> PiRational {
        self.nodes
            .iter()
            .map(|n| n.value.abs())
            .fold(PiRational::zero(), PiRational::max)
    }
}

pub(crate) fn evaluate_nodes(nodes: &[ProfileNode], s: &BigRational) -> PiRational {
    let first = &nodes[0];
    if *s <= first.s {
        return first.value.clone();
    }
    let last = &nodes[nodes.len() - 1];
    if *s >= last.s {
        return last.value.clone();
    }
    let idx = nodes.partition_point(|n| n.s <= *s);
    let (left, right) = (&nodes[idx - 1], &nodes[idx]);
    if left.s == *s {
        return left.value.clone();
    }
    let t = (s - &left.s) / (&right.s - &left.s);
    &left.value + (&right.value - &left.value).scale(&t)
}

fn segment_slope(nodes: &[ProfileNode], i: usize) -> PiRational {
    if i + 1 >= nodes.len() {
        return PiRational::zero();
    }
    let ds = &nodes[i + 1].s - &nodes[i].s;
    (&nodes[i + 1].value - &nodes[i].value)
        .div_rational(&ds)
        .expect("strictly increasing abscissae")
}

/// Sign of `f''` across a corner: `+1` when the slope increases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Concavity {
    #[serde(rename = "+1")]
    Convex,
    #[serde(rename = "-1")]
    Concave,
}

impl Concavity {
    pub fn sign(self) -> i64 {
        match self {
            Concavity::Convex => 1,
            Concavity::Concave => -1,
        }
    }
}

/// A node where the slope jumps, with the admissible winding numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corner {
    pub node: usize,
    pub s: BigRational,
    pub value: PiRational,
    pub slope_left: PiRational,
    pub slope_right: PiRational,
    /// Inclusive range of integers `l` with `2πl` strictly between the slopes
    /// (zero may lie inside; it is skipped by [`Corner::windings`]).
    pub l_min: BigInt,
    pub l_max: BigInt,
}

impl Corner {
    pub fn concavity(&self) -> Concavity {
        if self.slope_right > self.slope_left {
            Concavity::Convex
        } else {
            Concavity::Concave
        }
    }

    /// Number of nonzero admissible windings.
    pub fn winding_count(&self) -> BigInt {
        if self.l_max < self.l_min {
            return BigInt::zero();
        }
        let span = &self.l_max - &self.l_min + 1;
        if self.l_min <= BigInt::zero() && self.l_max >= BigInt::zero() {
            span - 1
        } else {
            span
        }
    }

    pub fn windings(&self) -> Result<impl Iterator<Item = i64>, ExactError> {
        let lo = bigint_to_i64(&self.l_min)?;
        let hi = bigint_to_i64(&self.l_max)?;
        Ok((lo..=hi).filter(|&l| l != 0))
    }

    pub fn circle(&self, l: i64) -> OrbitCircle {
        OrbitCircle {
            s_star: self.s.clone(),
            l,
            concavity: self.concavity(),
            f_value: self.value.clone(),
        }
    }
}

fn corners_of(nodes: &[ProfileNode]) -> Vec<Corner> {
    let two_pi = PiRational::pi().scale_int(2);
    let mut out = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        let slope_left = if i == 0 { PiRational::zero() } else { segment_slope(nodes, i - 1) };
        let slope_right = segment_slope(nodes, i);
        if slope_left == slope_right {
            continue;
        }
        let (lo, hi) = match slope_left.cmp(&slope_right) {
            Ordering::Less => (&slope_left, &slope_right),
            _ => (&slope_right, &slope_left),
        };
        // smallest l with 2πl > lo, largest l with 2πl < hi
        let l_min = lo.floor_div(&two_pi).expect("2π ≠ 0") + 1;
        let l_max = ceil_div(hi, &two_pi).expect("2π ≠ 0") - 1;
        out.push(Corner {
            node: i,
            s: node.s.clone(),
            value: node.value.clone(),
            slope_left,
            slope_right,
            l_min,
            l_max,
        });
    }
    out
}

/// Sphere family of 1-periodic orbits at a corner with winding number `l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrbitCircle {
    #[serde(rename = "s", with = "crate::exact::rational_string")]
    pub s_star: BigRational,
    pub l: i64,
    pub concavity: Concavity,
    pub f_value: PiRational,
}

/// All orbit circles of a profile, sorted by `(s_star, l)`.
pub fn orbit_circles(profile: &RadialProfile) -> Result<Vec<OrbitCircle>, ExactError> {
    let mut out = Vec::new();
    for corner in profile.corners() {
        for l in corner.windings()? {
            out.push(corner.circle(l));
        }
    }
    Ok(out)
}

fn check_shell_parameters(r: &BigRational, eps: &BigRational) -> Result<(), ProfileError> {
    if !r.is_positive() {
        return Err(ProfileError::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    if !eps.is_positive() {
        return Err(ProfileError::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    if eps * rational_from_int(4) >= *r {
        return Err(ProfileError::InvalidParameter(format!("epsilon must satisfy epsilon < r/4 (r = {r}, epsilon = {eps})")));
    }
    Ok(())
}

/// The four shell abscissae `(r - kε)²/2`, `k = 4, 3, 2, 1`.
pub fn shell_nodes(r: &BigRational, eps: &BigRational) -> [BigRational; 4] {
    [4, 3, 2, 1].map(|k| shell_abscissa(r, eps, k))
}

/// Spectral killer for the ball of radius `r`: zero off the shell
/// `r - 4ε ≤ |z| ≤ r - ε`, equal to `-πr²` on `r - 3ε ≤ |z| ≤ r - 2ε`.
pub fn make_killer(r: &BigRational, eps: &BigRational) -> Result<RadialProfile, ProfileError> {
    check_shell_parameters(r, eps)?;
    let [s4, s3, s2, s1] = shell_nodes(r, eps);
    let floor = -ball_area(r);
    RadialProfile::from_pairs(vec![
        (s4, PiRational::zero()),
        (s3, floor.clone()),
        (s2, floor),
        (s1, PiRational::zero()),
    ])
}

/// Profile `f` used to certify a killer: `m` on the inner ball, `-πr²` on the
/// shell, zero outside.
pub fn make_certification_profile(r: &BigRational, eps: &BigRational, m: &PiRational) -> Result<RadialProfile, ProfileError> {
    make_plateau_profile(r, eps, m, &-ball_area(r))
}

/// Certification profile with the shell plateau at `plateau` instead of `-πr²`.
pub fn make_plateau_profile(
    r: &BigRational,
    eps: &BigRational,
    m: &PiRational,
    plateau: &PiRational,
) -> Result<RadialProfile, ProfileError> {
    check_shell_parameters(r, eps)?;
    if !m.is_positive() {
        return Err(ProfileError::InvalidParameter(format!("m must be positive, got {m}")));
    }
    let [s4, s3, s2, s1] = shell_nodes(r, eps);
    RadialProfile::from_pairs(vec![
        (s4, m.clone()),
        (s3, plateau.clone()),
        (s2, plateau.clone()),
        (s1, PiRational::zero()),
    ])
}

pub fn sup_norm(profile: &RadialProfile) -> PiRational {
    profile.sup_norm()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub condition: u8,
    pub description: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillerValidation {
    pub conditions: Vec<ConditionCheck>,
}

impl KillerValidation {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<u8> {
        self.conditions.iter().filter(|c| !c.passed).map(|c| c.condition).collect()
    }
}

/// `true` if every node strictly inside `(a, b)` lies on the chord.
fn linear_on(profile: &RadialProfile, a: &BigRational, b: &BigRational) -> bool {
    let fa = profile.evaluate(a);
    let fb = profile.evaluate(b);
    profile
        .nodes()
        .iter()
        .filter(|n| n.s > *a && n.s < *b)
        .all(|n| {
            let t = (&n.s - a) / (b - a);
            n.value == &fa + (&fb - &fa).scale(&t)
        })
}

/// Checks the five defining conditions of a spectral killer one by one.
/// Linearity is checked in the `s` coordinate.
pub fn validate_killer(profile: &RadialProfile, r: &BigRational, eps: &BigRational) -> KillerValidation {
    let mut conditions = Vec::with_capacity(5);
    if let Err(e) = check_shell_parameters(r, eps) {
        for (i, d) in CONDITION_NAMES.iter().enumerate() {
            conditions.push(ConditionCheck {
                condition: i as u8 + 1,
                description: d.to_string(),
                passed: false,
                detail: e.to_string(),
            });
        }
        return KillerValidation { conditions };
    }
    let [s4, s3, s2, s1] = shell_nodes(r, eps);
    let floor = -ball_area(r);
    let zero = PiRational::zero();

    let outside_zero = profile.evaluate(&BigRational::zero()) == zero
        && profile.evaluate(&s4) == zero
        && profile.evaluate(&s1) == zero
        && profile
            .nodes()
            .iter()
            .filter(|n| n.s <= s4 || n.s >= s1)
            .all(|n| n.value == zero);
    conditions.push(ConditionCheck {
        condition: 1,
        description: CONDITION_NAMES[0].into(),
        passed: outside_zero,
        detail: if outside_zero {
            format!("f vanishes on [0, {s4}] and [{s1}, ∞)")
        } else {
            format!("f is nonzero somewhere outside [{s4}, {s1}]")
        },
    });

    conditions.push(ConditionCheck {
        condition: 2,
        description: CONDITION_NAMES[1].into(),
        passed: true,
        detail: "profiles depend on |z| only".into(),
    });

    let descends = linear_on(profile, &s4, &s3) && profile.evaluate(&s4) > profile.evaluate(&s3);
    conditions.push(ConditionCheck {
        condition: 3,
        description: CONDITION_NAMES[2].into(),
        passed: descends,
        detail: format!("f({s4}) = {}, f({s3}) = {}", profile.evaluate(&s4), profile.evaluate(&s3)),
    });

    let plateau = profile.evaluate(&s3) == floor
        && profile.evaluate(&s2) == floor
        && profile
            .nodes()
            .iter()
            .filter(|n| n.s > s3 && n.s < s2)
            .all(|n| n.value == floor);
    conditions.push(ConditionCheck {
        condition: 4,
        description: CONDITION_NAMES[3].into(),
        passed: plateau,
        detail: format!("expected {floor} on [{s3}, {s2}]"),
    });

    let ascends = linear_on(profile, &s2, &s1) && profile.evaluate(&s2) < profile.evaluate(&s1);
    conditions.push(ConditionCheck {
        condition: 5,
        description: CONDITION_NAMES[4].into(),
        passed: ascends,
        detail: format!("f({s2}) = {}, f({s1}) = {}", profile.evaluate(&s2), profile.evaluate(&s1)),
    });

    KillerValidation { conditions }
}

const CONDITION_NAMES: [&str; 5] = [
    "support inside the shell r-4ε ≤ |z| ≤ r-ε",
    "radial",
    "linear descent on [r-4ε, r-3ε]",
    "plateau -πr² on [r-3ε, r-2ε]",
    "linear ascent on [r-2ε, r-ε]",
];
