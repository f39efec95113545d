use ndarray::Array2;
use proptest::prelude::*;

use spectral_killers::cover::{
    bilinear, build_partition, color_disjoint_families, d_regularity, norm_inf_one, norm_inf_one_brute_force, nu_c,
    poisson_bracket_matrix, verify_families, BallCover, Cutoff, Disk, Domain, Grid, NuOptions, NuReport,
};

/// `k × k` torus grid with centres jittered by at most `0.08h`; still a cover
/// since `r = 1.2·h/√2` exceeds the half-diagonal plus the jitter.
fn jittered(k: usize, jitter: &[(f64, f64)]) -> BallCover {
    let mut cover = BallCover::torus_grid(k, 1.0, 1.2).unwrap();
    let h = 1.0 / k as f64;
    for (b, (dx, dy)) in cover.balls.iter_mut().zip(jitter) {
        b.c = [b.c[0] + 0.08 * h * dx, b.c[1] + 0.08 * h * dy];
    }
    cover
}

fn covers() -> impl Strategy<Value = BallCover> {
    (2usize..=4).prop_flat_map(|k| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), k * k).prop_map(move |j| jittered(k, &j))
    })
}

fn cutoffs() -> impl Strategy<Value = Cutoff> {
    prop_oneof![Just(Cutoff::Polynomial), Just(Cutoff::Exponential)]
}

fn antisymmetric(l: usize, entries: &[f64]) -> Array2<f64> {
    let mut b = Array2::zeros((l, l));
    let mut it = entries.iter();
    for i in 0..l {
        for j in i + 1..l {
            let v = *it.next().unwrap();
            b[[i, j]] = v;
            b[[j, i]] = -v;
        }
    }
    b
}

fn matrices() -> impl Strategy<Value = Array2<f64>> {
    (2usize..=9).prop_flat_map(|l| prop::collection::vec(-1.0f64..1.0, l * (l - 1) / 2).prop_map(move |e| antisymmetric(l, &e)))
}

#[test]
fn four_by_four_grid_frozen() {
    let cover = BallCover::torus_grid(4, 1.0, 1.2).unwrap();
    assert_eq!(d_regularity(&cover), 8);
    let fam = color_disjoint_families(&cover);
    assert!(fam.len() <= 9);
    assert!(verify_families(&cover, &fam).is_empty());
}

#[test]
fn nu_report_json_round_trip() {
    let cover = BallCover::torus_grid(3, 1.0, 1.2).unwrap();
    let pou = build_partition(&cover, Cutoff::Polynomial, Grid { n: 24 }).unwrap();
    let rep = nu_c(&pou, &NuOptions::default());
    let back: NuReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
    assert_eq!(back, rep);
    let back: BallCover = serde_json::from_str(&serde_json::to_string(&cover).unwrap()).unwrap();
    assert_eq!(back, cover);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partition_sums_to_one(cover in covers(), cutoff in cutoffs(), x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let pou = build_partition(&cover, cutoff, Grid { n: 8 }).unwrap();
        let v = pou.values([x, y]);
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(v.iter().all(|f| *f >= 0.0));
    }

    #[test]
    fn bracket_matrix_antisymmetric_with_zero_rows(cover in covers(), cutoff in cutoffs(), x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let pou = build_partition(&cover, cutoff, Grid { n: 8 }).unwrap();
        let b = poisson_bracket_matrix(&pou, [x, y]);
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                prop_assert_eq!(b[[i, j]], -b[[j, i]]);
            }
            prop_assert!(b.row(i).sum().abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn gradients_match_finite_differences(cover in covers(), cutoff in cutoffs(), x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let pou = build_partition(&cover, cutoff, Grid { n: 8 }).unwrap();
        let h = 1e-6;
        let g = pou.gradients([x, y]);
        let (vxp, vxm) = (pou.values([x + h, y]), pou.values([x - h, y]));
        let (vyp, vym) = (pou.values([x, y + h]), pou.values([x, y - h]));
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v[0].abs()).max(v[1].abs()));
        for i in 0..pou.len() {
            let fd = [(vxp[i] - vxm[i]) / (2.0 * h), (vyp[i] - vym[i]) / (2.0 * h)];
            prop_assert!((fd[0] - g[i][0]).abs() <= 1e-4 * scale, "x: {} vs {}", fd[0], g[i][0]);
            prop_assert!((fd[1] - g[i][1]).abs() <= 1e-4 * scale, "y: {} vs {}", fd[1], g[i][1]);
        }
    }

    #[test]
    fn exact_norm_matches_brute_force(b in matrices()) {
        let e = norm_inf_one(&b, 16, 0);
        let f = norm_inf_one_brute_force(&b);
        prop_assert!(e.exact);
        prop_assert!((e.value - f.value).abs() <= 1e-12 * f.value.max(1.0));
        prop_assert_eq!(bilinear(&e.x, &b, &e.y), e.value);
    }

    #[test]
    fn norm_dominates_every_sign_pair(b in matrices(), bits in any::<u64>()) {
        let l = b.nrows();
        let x: Vec<i8> = (0..l).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect();
        let y: Vec<i8> = (0..l).map(|i| if bits >> (i + 32) & 1 == 1 { -1 } else { 1 }).collect();
        prop_assert!(bilinear(&x, &b, &y) <= norm_inf_one(&b, 16, 0).value + 1e-12);
        let neg: Vec<i8> = x.iter().map(|s| -s).collect();
        prop_assert!((bilinear(&neg, &b, &y) + bilinear(&x, &b, &y)).abs() < 1e-12);
    }

    #[test]
    fn heuristic_is_seed_deterministic(b in matrices(), seed in any::<u64>()) {
        let first = norm_inf_one(&b, 1, seed);
        prop_assert!(!first.exact);
        prop_assert_eq!(&first, &norm_inf_one(&b, 1, seed));
        prop_assert!(first.value <= norm_inf_one(&b, 16, 0).value + 1e-12);
    }

    #[test]
    fn coloring_is_valid(balls in prop::collection::vec(((0.0f64..4.0, 0.0f64..4.0), 0.05f64..0.8), 1..40)) {
        let disks = balls.into_iter().map(|((x, y), r)| Disk { c: [x, y], r }).collect();
        let cover = BallCover::new(Domain::Torus([4.0, 4.0]), disks).unwrap();
        let fam = color_disjoint_families(&cover);
        prop_assert!(fam.len() <= d_regularity(&cover) + 1);
        prop_assert!(verify_families(&cover, &fam).is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn nu_invariant_under_relabeling(cover in covers(), perm_seed in any::<u64>()) {
        let grid = Grid { n: 32 };
        let base = nu_c(&build_partition(&cover, Cutoff::Polynomial, grid).unwrap(), &NuOptions::default());
        let mut order: Vec<usize> = (0..cover.len()).collect();
        let mut s = perm_seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let mut shuffled = cover.clone();
        shuffled.balls = order.iter().map(|&i| cover.balls[i]).collect();
        let other = nu_c(&build_partition(&shuffled, Cutoff::Polynomial, grid).unwrap(), &NuOptions::default());
        prop_assert!((base.nu_c - other.nu_c).abs() <= 1e-9 * base.nu_c);
    }

    #[test]
    fn nu_invariant_under_grid_translation(cover in covers(), a in 0usize..32, b in 0usize..32) {
        let grid = Grid { n: 32 };
        let base = nu_c(&build_partition(&cover, Cutoff::Polynomial, grid).unwrap(), &NuOptions::default());
        let mut moved = cover.clone();
        for ball in &mut moved.balls {
            ball.c = [(ball.c[0] + a as f64 / 32.0).rem_euclid(1.0), (ball.c[1] + b as f64 / 32.0).rem_euclid(1.0)];
        }
        let other = nu_c(&build_partition(&moved, Cutoff::Polynomial, grid).unwrap(), &NuOptions::default());
        prop_assert!((base.nu_c - other.nu_c).abs() <= 1e-9 * base.nu_c);
    }

    #[test]
    fn nu_is_deterministic(cover in covers(), seed in any::<u64>()) {
        let pou = build_partition(&cover, Cutoff::Exponential, Grid { n: 24 }).unwrap();
        let opts = NuOptions { exact_cap: 2, seed };
        prop_assert_eq!(nu_c(&pou, &opts), nu_c(&pou, &opts));
    }
}
