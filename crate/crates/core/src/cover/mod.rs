//! Disk covers of a flat torus or a plane rectangle.

mod nu;
mod partition;

pub use nu::{
    bilinear, check_lower_bound, norm_inf_one, norm_inf_one_brute_force, nu_c, nu_field, poisson_bracket_matrix,
    BoundStatus, InfOneResult, LowerBoundOptions, LowerBoundReport, NuOptions, NuReport, DEFAULT_EXACT_CAP,
};
pub use partition::{build_partition, build_partition_with_support, Cutoff, Grid, Member, PartitionOfUnity};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverError {
    #[error("cover has no balls")]
    Empty,
    #[error("ball {index}: {message}")]
    InvalidBall { index: usize, message: String },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("grid point ({x}, {y}) is not covered")]
    NotACover { x: f64, y: f64 },
    #[error("grid resolution must be at least {min}, got {got}")]
    GridTooSmall { min: usize, got: usize },
    #[error("support scale must be positive, got {0}")]
    SupportScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Flat torus `[0, Lx) × [0, Ly)` with the periodic metric.
    Torus([f64; 2]),
    /// Rectangle `[x0, x1] × [y0, y1]`.
    Rect([f64; 4]),
}

impl Domain {
    pub fn validate(&self) -> Result<(), CoverError> {
        let ok = match *self {
            Domain::Torus([lx, ly]) => lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0,
            Domain::Rect([x0, y0, x1, y1]) => [x0, y0, x1, y1].iter().all(|v| v.is_finite()) && x1 > x0 && y1 > y0,
        };
        if ok {
            Ok(())
        } else {
            Err(CoverError::InvalidDomain(format!("{self:?}")))
        }
    }

    /// `b - a`, using the nearest periodic image on the torus.
    pub fn displacement(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        let mut d = [b[0] - a[0], b[1] - a[1]];
        if let Domain::Torus(l) = self {
            for k in 0..2 {
                d[k] -= l[k] * (d[k] / l[k]).round();
            }
        }
        d
    }

    pub fn dist_sq(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = self.displacement(a, b);
        d[0] * d[0] + d[1] * d[1]
    }

    /// `[x0, y0, x1, y1]` bounding box of the fundamental domain.
    pub fn bounds(&self) -> [f64; 4] {
        match *self {
            Domain::Torus([lx, ly]) => [0.0, 0.0, lx, ly],
            Domain::Rect(b) => b,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Domain::Torus(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub c: [f64; 2],
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallCover {
    pub domain: Domain,
    pub balls: Vec<Disk>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl BallCover {
    pub fn new(domain: Domain, balls: Vec<Disk>) -> Result<Self, CoverError> {
        let cover = Self { domain, balls, id: None };
        cover.validate()?;
        Ok(cover)
    }

    pub fn validate(&self) -> Result<(), CoverError> {
        self.domain.validate()?;
        if self.balls.is_empty() {
            return Err(CoverError::Empty);
        }
        for (index, b) in self.balls.iter().enumerate() {
            let bad = |message: &str| CoverError::InvalidBall { index, message: message.to_string() };
            if !(b.r.is_finite() && b.r > 0.0) {
                return Err(bad("radius must be positive"));
            }
            if !(b.c[0].is_finite() && b.c[1].is_finite()) {
                return Err(bad("center must be finite"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.balls.iter().map(|b| b.r).fold(0.0, f64::max)
    }

    /// Closed disks `i` and `j` meet.
    pub fn closures_meet(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.balls[i], &self.balls[j]);
        let reach = a.r + b.r;
        self.domain.dist_sq(a.c, b.c) <= reach * reach
    }

    /// `k × k` grid of disks on the torus `[0, side)²`, centred in the cells,
    /// with radius `overlap × half-diagonal` of a cell.
    pub fn torus_grid(k: usize, side: f64, overlap: f64) -> Result<Self, CoverError> {
        let h = side / k as f64;
        let r = overlap * h * std::f64::consts::FRAC_1_SQRT_2;
        let balls = (0..k * k)
            .map(|n| {
                let (i, j) = (n % k, n / k);
                Disk { c: [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h], r }
            })
            .collect();
        let mut cover = Self::new(Domain::Torus([side, side]), balls)?;
        cover.id = Some(format!("torus-grid-{k}x{k}"));
        Ok(cover)
    }
}

/// Adjacency lists; edge iff closed disks intersect.
pub fn intersection_graph(cover: &BallCover) -> Vec<Vec<usize>> {
    let n = cover.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if cover.closures_meet(i, j) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Maximum degree of the intersection graph.
pub fn d_regularity(cover: &BallCover) -> usize {
    intersection_graph(cover).iter().map(Vec::len).max().unwrap_or(0)
}

/// Greedy colouring of the intersection graph: vertices by descending degree
/// (index breaks ties), each takes the lowest colour unused by its
/// neighbours. Returns the colour classes in colour order.
pub fn color_disjoint_families(cover: &BallCover) -> Vec<Vec<usize>> {
    color_graph(&intersection_graph(cover))
}

pub fn color_graph(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..adj.len()).collect();
    order.sort_by(|a, b| adj[*b].len().cmp(&adj[*a].len()).then(a.cmp(b)));
    let mut color = vec![usize::MAX; adj.len()];
    let mut families: Vec<Vec<usize>> = Vec::new();
    for v in order {
        let used: Vec<usize> = adj[v].iter().map(|u| color[*u]).filter(|c| *c != usize::MAX).collect();
        let c = (0..).find(|c| !used.contains(c)).expect("unbounded search");
        color[v] = c;
        if c == families.len() {
            families.push(Vec::new());
        }
        families[c].push(v);
    }
    for f in &mut families {
        f.sort_unstable();
    }
    families
}

/// Geometric recheck: every family is pairwise disjoint (closures do not meet)
/// and every ball appears exactly once. Returns the offending pairs.
pub fn verify_families(cover: &BallCover, families: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut bad = Vec::new();
    let mut seen = vec![0usize; cover.len()];
    for f in families {
        for (a, &i) in f.iter().enumerate() {
            seen[i] += 1;
            for &j in &f[a + 1..] {
                if cover.closures_meet(i, j) {
                    bad.push((i, j));
                }
            }
        }
    }
    for (i, s) in seen.iter().enumerate() {
        if *s != 1 {
            bad.push((i, i));
        }
    }
    bad
}
