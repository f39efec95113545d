//! Normalized bump partitions of unity with analytic gradients.

use serde::{Deserialize, Serialize};

use super::{BallCover, CoverError, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cutoff {
    /// `(1 - t²)³` on `t < 1`; C².
    #[default]
    Polynomial,
    /// `exp(-1/(1 - t²))` on `t < 1`; C^∞.
    Exponential,
}

impl Cutoff {
    /// Bump value and derivative in `u = t²`, for `0 ≤ u < 1`.
    fn eval(self, u: f64) -> (f64, f64) {
        let w = 1.0 - u;
        match self {
            Cutoff::Polynomial => (w * w * w, -3.0 * w * w),
            Cutoff::Exponential => {
                let v = (-1.0 / w).exp();
                (v, -v / (w * w))
            }
        }
    }
}

/// Uniform sample grid. On a torus the points are `x0 + i·Lx/n` for
/// `i < n`, so the grid for `n` is contained in the grid for `2n`. On a
/// rectangle both endpoints are included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
}

impl Grid {
    pub fn point(&self, domain: &Domain, i: usize, j: usize) -> [f64; 2] {
        let [x0, y0, x1, y1] = domain.bounds();
        let n = self.n as f64;
        let (tx, ty) = if domain.is_torus() {
            (i as f64 / n, j as f64 / n)
        } else {
            (i as f64 / (n - 1.0), j as f64 / (n - 1.0))
        };
        [x0 + tx * (x1 - x0), y0 + ty * (y1 - y0)]
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Row-major flat index `j·n + i` to `(i, j)`.
    pub fn unflatten(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }
}

/// One nonzero partition member at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub index: usize,
    pub value: f64,
    pub grad: [f64; 2],
}

/// Buckets of balls by bounding box, for local lookup.
#[derive(Debug, Clone)]
struct BallIndex {
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    cell: [f64; 2],
    buckets: Vec<Vec<usize>>,
}

impl BallIndex {
    fn new(domain: &Domain, centers: &[[f64; 2]], radii: &[f64]) -> Self {
        let [x0, y0, x1, y1] = domain.bounds();
        let (w, h) = (x1 - x0, y1 - y0);
        let reach = radii.iter().copied().fold(0.0, f64::max).max(1e-300);
        let count = |len: f64| ((len / reach).floor() as usize).clamp(1, 256);
        let (nx, ny) = (count(w), count(h));
        let mut index = Self {
            nx,
            ny,
            origin: [x0, y0],
            cell: [w / nx as f64, h / ny as f64],
            buckets: vec![Vec::new(); nx * ny],
        };
        let periodic = domain.is_torus();
        for (b, (c, r)) in centers.iter().zip(radii).enumerate() {
            let span = |axis: usize, n: usize| -> Vec<usize> {
                let lo = ((c[axis] - r - index.origin[axis]) / index.cell[axis]).floor() as i64;
                let hi = ((c[axis] + r - index.origin[axis]) / index.cell[axis]).floor() as i64;
                if periodic {
                    if hi - lo + 1 >= n as i64 {
                        (0..n).collect()
                    } else {
                        (lo..=hi).map(|k| k.rem_euclid(n as i64) as usize).collect()
                    }
                } else {
                    let lo = lo.clamp(0, n as i64 - 1);
                    let hi = hi.clamp(0, n as i64 - 1);
                    (lo..=hi).map(|k| k as usize).collect()
                }
            };
            for j in span(1, ny) {
                for i in span(0, nx) {
                    index.buckets[j * nx + i].push(b);
                }
            }
        }
        for bucket in &mut index.buckets {
            bucket.sort_unstable();
            bucket.dedup();
        }
        index
    }

    fn candidates(&self, z: [f64; 2], periodic: bool) -> &[usize] {
        let locate = |axis: usize, n: usize| {
            let k = ((z[axis] - self.origin[axis]) / self.cell[axis]).floor() as i64;
            if periodic {
                k.rem_euclid(n as i64) as usize
            } else {
                k.clamp(0, n as i64 - 1) as usize
            }
        };
        &self.buckets[locate(1, self.ny) * self.nx + locate(0, self.nx)]
    }
}

/// `f_i = φ_i / Σ_j φ_j` with `φ_i(z) = φ(|z - c_i| / R_i)`.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub cover: BallCover,
    pub cutoff: Cutoff,
    /// Bump support radii `R_i`; subordinate iff `R_i ≤ r_i`.
    pub support: Vec<f64>,
    pub grid: Grid,
    index: BallIndex,
}

impl PartitionOfUnity {
    pub fn len(&self) -> usize {
        self.cover.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cover.is_empty()
    }

    pub fn is_subordinate(&self) -> bool {
        self.support.iter().zip(&self.cover.balls).all(|(s, b)| *s <= b.r)
    }

    /// Balls whose bump support exceeds the ball.
    pub fn unsubordinated(&self) -> Vec<usize> {
        (0..self.len()).filter(|i| self.support[*i] > self.cover.balls[*i].r).collect()
    }

    /// Bumps and their gradients at `z`, in ascending ball order.
    fn bumps(&self, z: [f64; 2]) -> Vec<Member> {
        let domain = &self.cover.domain;
        let mut out = Vec::new();
        for &i in self.index.candidates(z, domain.is_torus()) {
            let ball = &self.cover.balls[i];
            let d = domain.displacement(ball.c, z);
            let r2 = self.support[i] * self.support[i];
            let u = (d[0] * d[0] + d[1] * d[1]) / r2;
            if u < 1.0 {
                let (v, dv) = self.cutoff.eval(u);
                if v > 0.0 {
                    let k = 2.0 * dv / r2;
                    out.push(Member { index: i, value: v, grad: [k * d[0], k * d[1]] });
                }
            }
        }
        out
    }

    /// Nonzero members `f_i` and `∇f_i` at `z`; empty where no bump is
    /// positive.
    pub fn members(&self, z: [f64; 2]) -> Vec<Member> {
        let mut m = self.bumps(z);
        let total: f64 = m.iter().map(|b| b.value).sum();
        if total <= 0.0 {
            return Vec::new();
        }
        let gs = m.iter().fold([0.0, 0.0], |g, b| [g[0] + b.grad[0], g[1] + b.grad[1]]);
        for b in &mut m {
            let f = b.value / total;
            b.grad = [(b.grad[0] - f * gs[0]) / total, (b.grad[1] - f * gs[1]) / total];
            b.value = f;
        }
        m
    }

    /// All `L` values at `z`.
    pub fn values(&self, z: [f64; 2]) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        for m in self.members(z) {
            v[m.index] = m.value;
        }
        v
    }

    /// All `L` gradients at `z`.
    pub fn gradients(&self, z: [f64; 2]) -> Vec<[f64; 2]> {
        let mut g = vec![[0.0; 2]; self.len()];
        for m in self.members(z) {
            g[m.index] = m.grad;
        }
        g
    }

    pub fn grid_point(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.grid.unflatten(k);
        self.grid.point(&self.cover.domain, i, j)
    }

    /// Largest `|Σ f_i - 1|` and smallest `f_i` over the grid.
    pub fn identity_defect(&self) -> (f64, f64) {
        let mut worst: f64 = 0.0;
        let mut min: f64 = f64::INFINITY;
        for k in 0..self.grid.len() {
            let m = self.members(self.grid_point(k));
            worst = worst.max((m.iter().map(|b| b.value).sum::<f64>() - 1.0).abs());
            min = m.iter().map(|b| b.value).fold(min, f64::min);
        }
        (worst, min)
    }
}

pub fn build_partition(cover: &BallCover, cutoff: Cutoff, grid: Grid) -> Result<PartitionOfUnity, CoverError> {
    build_partition_with_support(cover, cutoff, grid, 1.0)
}

/// Like [`build_partition`] with bump radii `scale·r_i`; a scale above 1
/// gives a partition that is not subordinate to the cover.
pub fn build_partition_with_support(
    cover: &BallCover,
    cutoff: Cutoff,
    grid: Grid,
    scale: f64,
) -> Result<PartitionOfUnity, CoverError> {
    cover.validate()?;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CoverError::SupportScale(scale));
    }
    let min = if cover.domain.is_torus() { 1 } else { 2 };
    if grid.n < min {
        return Err(CoverError::GridTooSmall { min, got: grid.n });
    }
    let support: Vec<f64> = cover.balls.iter().map(|b| b.r * scale).collect();
    let centers: Vec<[f64; 2]> = cover.balls.iter().map(|b| b.c).collect();
    let index = BallIndex::new(&cover.domain, &centers, &support);
    let pou = PartitionOfUnity { cover: cover.clone(), cutoff, support, grid, index };
    for k in 0..grid.len() {
        let z = pou.grid_point(k);
        if pou.bumps(z).is_empty() {
            return Err(CoverError::NotACover { x: z[0], y: z[1] });
        }
    }
    Ok(pou)
}

#[cfg(test)]
mod tests {
    use super::super::Disk;
    use super::*;

    #[test]
    fn single_ball_gives_constant_one() {
        let cover = BallCover::new(Domain::Torus([1.0, 1.0]), vec![Disk { c: [0.5, 0.5], r: 0.8 }]).unwrap();
        let pou = build_partition(&cover, Cutoff::Polynomial, Grid { n: 16 }).unwrap();
        for k in 0..pou.grid.len() {
            let m = pou.members(pou.grid_point(k));
            assert_eq!(m.len(), 1);
            assert!((m[0].value - 1.0).abs() < 1e-15);
            assert!(m[0].grad[0].abs() < 1e-12 && m[0].grad[1].abs() < 1e-12);
        }
    }

    #[test]
    fn two_ball_identity() {
        let cover = BallCover::new(
            Domain::Rect([0.0, 0.0, 2.0, 1.0]),
            vec![Disk { c: [0.5, 0.5], r: 0.9 }, Disk { c: [1.5, 0.5], r: 0.9 }],
        )
        .unwrap();
        for cutoff in [Cutoff::Polynomial, Cutoff::Exponential] {
            let pou = build_partition(&cover, cutoff, Grid { n: 33 }).unwrap();
            let (defect, min) = pou.identity_defect();
            assert!(defect <= 1e-12, "{defect}");
            assert!(min >= 0.0);
        }
    }

    #[test]
    fn gap_reports_witness() {
        let cover = BallCover::new(
            Domain::Rect([0.0, 0.0, 2.0, 1.0]),
            vec![Disk { c: [0.25, 0.5], r: 0.5 }, Disk { c: [1.75, 0.5], r: 0.5 }],
        )
        .unwrap();
        match build_partition(&cover, Cutoff::Polynomial, Grid { n: 9 }) {
            Err(CoverError::NotACover { x, y }) => {
                assert!(cover.balls.iter().all(|b| cover.domain.dist_sq(b.c, [x, y]) >= b.r * b.r));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn torus_grid_nests_under_refinement() {
        let d = Domain::Torus([1.0, 1.0]);
        let (g, h) = (Grid { n: 64 }, Grid { n: 128 });
        for i in 0..64 {
            assert_eq!(g.point(&d, i, 3), h.point(&d, 2 * i, 6));
        }
    }

    #[test]
    fn gradient_matches_central_difference() {
        let cover = BallCover::torus_grid(3, 1.0, 1.2).unwrap();
        let pou = build_partition(&cover, Cutoff::Polynomial, Grid { n: 8 }).unwrap();
        let h = 1e-6;
        for z in [[0.31, 0.47], [0.05, 0.93], [0.66, 0.34]] {
            let g = pou.gradients(z);
            let (xp, xm) = (pou.values([z[0] + h, z[1]]), pou.values([z[0] - h, z[1]]));
            let (yp, ym) = (pou.values([z[0], z[1] + h]), pou.values([z[0], z[1] - h]));
            for i in 0..pou.len() {
                assert!((g[i][0] - (xp[i] - xm[i]) / (2.0 * h)).abs() < 1e-5);
                assert!((g[i][1] - (yp[i] - ym[i]) / (2.0 * h)).abs() < 1e-5);
            }
        }
    }
}
