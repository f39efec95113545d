//! Poisson bracket matrices and the box maximization defining `ν_c`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::partition::{Member, PartitionOfUnity};
use super::{d_regularity, BallCover};
use crate::calculus::{pb_lower_bound, BoundTrace, CalculusError};
use crate::exact::{format_rational, rational_from_f64, PiRational};

pub const DEFAULT_EXACT_CAP: usize = 16;

const HEURISTIC_STARTS: usize = 64;
const HEURISTIC_ROUNDS: usize = 200;

/// `B_ij = ∂x f_i ∂y f_j - ∂y f_i ∂x f_j` at `z`, full `L × L`.
pub fn poisson_bracket_matrix(pou: &PartitionOfUnity, z: [f64; 2]) -> Array2<f64> {
    let mut b = Array2::zeros((pou.len(), pou.len()));
    let m = pou.members(z);
    for p in &m {
        for q in &m {
            b[[p.index, q.index]] = bracket(p, q);
        }
    }
    b
}

fn bracket(p: &Member, q: &Member) -> f64 {
    p.grad[0] * q.grad[1] - p.grad[1] * q.grad[0]
}

fn local_matrix(m: &[Member]) -> Array2<f64> {
    Array2::from_shape_fn((m.len(), m.len()), |(i, j)| bracket(&m[i], &m[j]))
}

/// `xᵀ B y`.
pub fn bilinear(x: &[i8], b: &Array2<f64>, y: &[i8]) -> f64 {
    let mut total = 0.0;
    for (i, xi) in x.iter().enumerate() {
        let row: f64 = y.iter().enumerate().map(|(j, yj)| b[[i, j]] * f64::from(*yj)).sum();
        total += f64::from(*xi) * row;
    }
    total
}

fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// `Bᵀx`.
fn transpose_apply(b: &Array2<f64>, x: &[i8]) -> Vec<f64> {
    (0..b.ncols()).map(|j| x.iter().enumerate().map(|(i, xi)| f64::from(*xi) * b[[i, j]]).sum()).collect()
}

/// `B y`.
fn apply(b: &Array2<f64>, y: &[i8]) -> Vec<f64> {
    (0..b.nrows()).map(|i| y.iter().enumerate().map(|(j, yj)| b[[i, j]] * f64::from(*yj)).sum()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfOneResult {
    pub value: f64,
    pub x: Vec<i8>,
    pub y: Vec<i8>,
    pub exact: bool,
}

fn finish(b: &Array2<f64>, x: Vec<i8>, exact: bool) -> InfOneResult {
    let y: Vec<i8> = transpose_apply(b, &x).into_iter().map(sign).collect();
    InfOneResult { value: bilinear(&x, b, &y), x, y, exact }
}

/// `max xᵀBy` over sign vectors. Exact for `L ≤ cap`: `x₀ = +1` is fixed
/// (the objective is even in `(x, y)`), the remaining signs run through a
/// Gray code, and `y = sign(Bᵀx)`. Larger inputs use seeded multi-start
/// alternating ascent and are flagged inexact.
pub fn norm_inf_one(b: &Array2<f64>, cap: usize, seed: u64) -> InfOneResult {
    let l = b.nrows();
    assert_eq!(l, b.ncols(), "matrix must be square");
    if l == 0 {
        return InfOneResult { value: 0.0, x: Vec::new(), y: Vec::new(), exact: true };
    }
    if l > cap {
        return ascent(b, seed);
    }
    let mut x = vec![1i8; l];
    let mut v = transpose_apply(b, &x);
    let mut best = v.iter().map(|t| t.abs()).sum::<f64>();
    let mut best_x = x.clone();
    for k in 1u64..(1u64 << (l - 1)) {
        let bit = k.trailing_zeros() as usize + 1;
        let s = 2.0 * f64::from(x[bit]);
        for (j, vj) in v.iter_mut().enumerate() {
            *vj -= s * b[[bit, j]];
        }
        x[bit] = -x[bit];
        let value = v.iter().map(|t| t.abs()).sum::<f64>();
        if value > best {
            best = value;
            best_x.copy_from_slice(&x);
        }
    }
    finish(b, best_x, true)
}

fn ascent(b: &Array2<f64>, seed: u64) -> InfOneResult {
    let l = b.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<InfOneResult> = None;
    for start in 0..HEURISTIC_STARTS {
        let mut x: Vec<i8> = if start == 0 {
            vec![1; l]
        } else {
            (0..l).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
        };
        let mut value = f64::NEG_INFINITY;
        for _ in 0..HEURISTIC_ROUNDS {
            let y: Vec<i8> = transpose_apply(b, &x).into_iter().map(sign).collect();
            let next: Vec<i8> = apply(b, &y).into_iter().map(sign).collect();
            let v = bilinear(&next, b, &y);
            if v <= value {
                break;
            }
            value = v;
            x = next;
        }
        let candidate = finish(b, x, false);
        if best.as_ref().is_none_or(|b| candidate.value > b.value) {
            best = Some(candidate);
        }
    }
    best.expect("at least one start")
}

/// Reference value over all `4^L` sign pairs, with Gray-code updates in `y`.
pub fn norm_inf_one_brute_force(b: &Array2<f64>) -> InfOneResult {
    let l = b.nrows();
    let mut best = InfOneResult { value: f64::NEG_INFINITY, x: vec![1; l], y: vec![1; l], exact: true };
    if l == 0 {
        best.value = 0.0;
        return best;
    }
    for xm in 0u64..(1u64 << l) {
        let x: Vec<i8> = (0..l).map(|i| if xm >> i & 1 == 1 { -1 } else { 1 }).collect();
        let u = transpose_apply(b, &x);
        let mut y = vec![1i8; l];
        let mut w: f64 = u.iter().sum();
        let mut consider = |w: f64, y: &[i8]| {
            if w > best.value {
                best.value = w;
                best.x.copy_from_slice(&x);
                best.y.copy_from_slice(y);
            }
        };
        consider(w, &y);
        for k in 1u64..(1u64 << l) {
            let j = k.trailing_zeros() as usize;
            w -= 2.0 * f64::from(y[j]) * u[j];
            y[j] = -y[j];
            consider(w, &y);
        }
    }
    best.value = bilinear(&best.x, b, &best.y);
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuOptions {
    pub exact_cap: usize,
    pub seed: u64,
}

impl Default for NuOptions {
    fn default() -> Self {
        Self { exact_cap: DEFAULT_EXACT_CAP, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuReport {
    pub nu_c: f64,
    pub argmax: [f64; 2],
    pub argmax_index: [usize; 2],
    /// Witness signs on all `L` members; inactive members carry `+1`.
    pub x: Vec<i8>,
    pub y: Vec<i8>,
    /// Members with nonzero value at the argmax.
    pub active: Vec<usize>,
    pub max_active: usize,
    pub grid: usize,
    pub exact: bool,
    pub exact_cap: usize,
    pub seed: u64,
}

fn point_norm(pou: &PartitionOfUnity, k: usize, opts: &NuOptions) -> (InfOneResult, Vec<Member>) {
    let m = pou.members(pou.grid_point(k));
    let res = norm_inf_one(&local_matrix(&m), opts.exact_cap, opts.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    (res, m)
}

/// Per-grid-point `‖B(z)‖_{∞→1}`, row-major.
pub fn nu_field(pou: &PartitionOfUnity, opts: &NuOptions) -> Vec<f64> {
    (0..pou.grid.len()).into_par_iter().map(|k| point_norm(pou, k, opts).0.value).collect()
}

/// Maximum of the per-point norm over the grid. Ties go to the lowest grid
/// index, so the result does not depend on thread scheduling.
pub fn nu_c(pou: &PartitionOfUnity, opts: &NuOptions) -> NuReport {
    struct Acc {
        value: f64,
        k: usize,
        exact: bool,
        max_active: usize,
    }
    let pick = |a: Acc, b: Acc| {
        let take_b = b.value > a.value || (b.value == a.value && b.k < a.k);
        let (value, k) = if take_b { (b.value, b.k) } else { (a.value, a.k) };
        Acc { value, k, exact: a.exact && b.exact, max_active: a.max_active.max(b.max_active) }
    };
    let acc = (0..pou.grid.len())
        .into_par_iter()
        .map(|k| {
            let (res, m) = point_norm(pou, k, opts);
            Acc { value: res.value, k, exact: res.exact, max_active: m.len() }
        })
        .reduce(|| Acc { value: f64::NEG_INFINITY, k: usize::MAX, exact: true, max_active: 0 }, pick);

    let k = acc.k;
    let (res, m) = point_norm(pou, k, opts);
    let mut x = vec![1i8; pou.len()];
    let mut y = vec![1i8; pou.len()];
    for (slot, member) in m.iter().enumerate() {
        x[member.index] = res.x[slot];
        y[member.index] = res.y[slot];
    }
    let z = pou.grid_point(k);
    let full = poisson_bracket_matrix(pou, z);
    let (i, j) = pou.grid.unflatten(k);
    NuReport {
        nu_c: bilinear(&x, &full, &y),
        argmax: z,
        argmax_index: [i, j],
        x,
        y,
        active: m.iter().map(|b| b.index).collect(),
        max_active: acc.max_active,
        grid: pou.grid.n,
        exact: acc.exact,
        exact_cap: opts.exact_cap,
        seed: opts.seed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundOptions {
    /// Relative allowance for grid under-sampling; PASS iff
    /// `ν_c ≥ bound·(1 - grid_slack)`.
    pub grid_slack: f64,
    /// User assertion that every ball is displaceable with `E < |λ|/2`.
    pub energy_asserted: bool,
}

impl Default for LowerBoundOptions {
    fn default() -> Self {
        Self { grid_slack: 0.0, energy_asserted: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub status: BoundStatus,
    #[serde(default)]
    pub skip_reason: Option<String>,
    pub d: usize,
    pub r_max: f64,
    pub pi_r_sq: f64,
    /// `C(d) = 1/(2d²)` as `p/q`.
    #[serde(default)]
    pub c_d: Option<String>,
    #[serde(default)]
    pub bound: Option<f64>,
    pub nu_c: f64,
    #[serde(default)]
    pub ratio: Option<f64>,
    pub grid: usize,
    pub grid_slack: f64,
    pub exact: bool,
    pub subordinate: bool,
    pub unsubordinated: Vec<usize>,
    pub energy_asserted: bool,
    #[serde(default)]
    pub trace: Option<BoundTrace>,
}

/// Compares `ν_c` with `1/(2d²πr²)`, `r` the largest radius.
pub fn check_lower_bound(
    pou: &PartitionOfUnity,
    cover: &BallCover,
    nu: &NuReport,
    opts: &LowerBoundOptions,
) -> Result<LowerBoundReport, CalculusError> {
    let d = d_regularity(cover);
    let r = cover.max_radius();
    let mut report = LowerBoundReport {
        status: BoundStatus::Skipped,
        skip_reason: None,
        d,
        r_max: r,
        pi_r_sq: std::f64::consts::PI * r * r,
        c_d: None,
        bound: None,
        nu_c: nu.nu_c,
        ratio: None,
        grid: nu.grid,
        grid_slack: opts.grid_slack,
        exact: nu.exact,
        subordinate: pou.is_subordinate(),
        unsubordinated: pou.unsubordinated(),
        energy_asserted: opts.energy_asserted,
        trace: None,
    };
    if !report.subordinate {
        report.skip_reason = Some("partition is not subordinate to the cover".into());
        return Ok(report);
    }
    if d == 0 {
        report.skip_reason = Some("d = 0: the bound does not apply".into());
        return Ok(report);
    }
    let r_sq = rational_from_f64(r * r).ok_or_else(|| CalculusError::Schema {
        rule: "pb_lower_bound",
        message: "radius is not finite".into(),
    })?;
    let (bound, trace) = pb_lower_bound(d as u32, PiRational::pi_multiple(r_sq))?;
    let value = bound.value();
    report.c_d = Some(format_rational(&bound.c_d));
    report.bound = Some(value);
    report.ratio = Some(nu.nu_c / value);
    report.status = if nu.nu_c >= value * (1.0 - opts.grid_slack) { BoundStatus::Pass } else { BoundStatus::Fail };
    report.trace = Some(trace);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::{build_partition, build_partition_with_support, Cutoff, Disk, Domain, Grid};
    use super::*;

    fn antisymmetric(l: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = Array2::zeros((l, l));
        for i in 0..l {
            for j in i + 1..l {
                let v: f64 = rng.random_range(-1.0..1.0);
                b[[i, j]] = v;
                b[[j, i]] = -v;
            }
        }
        b
    }

    #[test]
    fn two_by_two_rotation() {
        let b = ndarray::array![[0.0, 0.7], [-0.7, 0.0]];
        let r = norm_inf_one(&b, 16, 0);
        assert!((r.value - 1.4).abs() < 1e-15);
        assert_eq!(bilinear(&r.x, &b, &r.y), r.value);
        assert!((norm_inf_one_brute_force(&b).value - 1.4).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix() {
        let b = Array2::zeros((5, 5));
        assert_eq!(norm_inf_one(&b, 16, 0).value, 0.0);
    }

    #[test]
    fn exact_matches_brute_force_at_eight() {
        for seed in 0..10 {
            let b = antisymmetric(8, seed);
            let e = norm_inf_one(&b, 16, 0);
            let f = norm_inf_one_brute_force(&b);
            assert!((e.value - f.value).abs() <= 1e-12 * f.value.max(1.0));
        }
    }

    #[test]
    fn heuristic_is_flagged_and_not_above_exact() {
        let b = antisymmetric(10, 7);
        let h = norm_inf_one(&b, 4, 1);
        let e = norm_inf_one(&b, 16, 0);
        assert!(!h.exact && e.exact);
        assert!(h.value <= e.value + 1e-12);
        assert!(h.value >= 0.5 * e.value);
        assert_eq!(h, norm_inf_one(&b, 4, 1));
    }

    #[test]
    fn two_member_partition_commutes() {
        let cover = BallCover::new(
            Domain::Rect([0.0, 0.0, 2.0, 1.0]),
            vec![Disk { c: [0.5, 0.5], r: 0.9 }, Disk { c: [1.5, 0.5], r: 0.9 }],
        )
        .unwrap();
        let pou = build_partition(&cover, Cutoff::Polynomial, Grid { n: 17 }).unwrap();
        let b = poisson_bracket_matrix(&pou, [1.0, 0.6]);
        assert!(b.iter().all(|v| v.abs() < 1e-12));
        assert!(nu_c(&pou, &NuOptions::default()).nu_c.abs() < 1e-12);
    }

    #[test]
    fn bracket_matrix_is_antisymmetric() {
        let cover = BallCover::torus_grid(4, 1.0, 1.2).unwrap();
        let pou = build_partition(&cover, Cutoff::Polynomial, Grid { n: 8 }).unwrap();
        let b = poisson_bracket_matrix(&pou, [0.26, 0.49]);
        let s = &b + &b.t();
        assert!(s.iter().all(|v| v.abs() <= 1e-12));
        assert!(b.iter().any(|v| v.abs() > 1e-6));
    }

    #[test]
    fn nu_report_witness_reproduces_value() {
        let cover = BallCover::torus_grid(4, 1.0, 1.2).unwrap();
        let pou = build_partition(&cover, Cutoff::Polynomial, Grid { n: 64 }).unwrap();
        let rep = nu_c(&pou, &NuOptions::default());
        let b = poisson_bracket_matrix(&pou, rep.argmax);
        assert_eq!(bilinear(&rep.x, &b, &rep.y), rep.nu_c);
        assert!(rep.exact);
        let field = nu_field(&pou, &NuOptions::default());
        let max = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((max - rep.nu_c).abs() <= 1e-12 * max);
    }

    #[test]
    fn bound_check_and_skips() {
        let cover = BallCover::torus_grid(4, 1.0, 1.2).unwrap();
        let pou = build_partition(&cover, Cutoff::Polynomial, Grid { n: 64 }).unwrap();
        let rep = nu_c(&pou, &NuOptions::default());
        let check = check_lower_bound(&pou, &cover, &rep, &LowerBoundOptions::default()).unwrap();
        assert_eq!(check.d, 8);
        assert_eq!(check.c_d.as_deref(), Some("1/128"));
        assert_eq!(check.status, BoundStatus::Pass);

        let wide = build_partition_with_support(&cover, Cutoff::Polynomial, Grid { n: 16 }, 1.5).unwrap();
        let rep = nu_c(&wide, &NuOptions::default());
        let check = check_lower_bound(&wide, &cover, &rep, &LowerBoundOptions::default()).unwrap();
        assert_eq!(check.status, BoundStatus::Skipped);
        assert_eq!(check.unsubordinated.len(), 16);
    }

    #[test]
    fn unit_area_bound_is_one_half() {
        // d = 1 and πr² = 1
        let r = (1.0 / std::f64::consts::PI).sqrt();
        let cover = BallCover::new(
            Domain::Rect([-2.0, -1.0, 2.0, 1.0]),
            vec![Disk { c: [-0.5, 0.0], r }, Disk { c: [0.5, 0.0], r }],
        )
        .unwrap();
        let (bound, _) = pb_lower_bound(1, PiRational::pi_multiple(rational_from_f64(r * r).unwrap())).unwrap();
        assert!((bound.value() - 0.5).abs() < 1e-15);
        assert_eq!(d_regularity(&cover), 1);
    }
}
