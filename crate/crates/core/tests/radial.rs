use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use spectral_killers::exact::{parse_rational, PiRational};
use spectral_killers::radial::{make_killer, orbit_circles, validate_killer, Concavity, RadialProfile};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Profiles with up to six nodes, values `a + bπ` with small coefficients;
/// every slope stays below `2π·64` in absolute value.
fn profiles() -> impl Strategy<Value = RadialProfile> {
    prop::collection::vec((1i64..40, -20i64..20, -3i64..3), 1..6).prop_map(|steps| {
        let mut s = q(0, 1);
        let mut pairs = Vec::new();
        for (i, (ds, a, b)) in steps.iter().enumerate() {
            s += q(*ds, 16);
            let value = if i + 1 == steps.len() { PiRational::zero() } else { PiRational::new(q(*a, 4), q(*b, 8)) };
            pairs.push((s.clone(), value));
        }
        RadialProfile::from_pairs(pairs).unwrap()
    })
}

fn shells() -> impl Strategy<Value = (BigRational, BigRational)> {
    (1i64..200, 1i64..100, 1i64..100).prop_filter_map("ε < r/4", |(r, a, b)| {
        let r = q(r, 100);
        let eps = &r * q(a.min(b), 4 * a.max(b) + 1);
        (eps > q(0, 1)).then_some((r, eps))
    })
}

#[test]
fn killer_for_unit_scenario_is_valid() {
    let r = parse_rational("0.35").unwrap();
    let eps = parse_rational("0.05").unwrap();
    let k = make_killer(&r, &eps).unwrap();
    assert!(validate_killer(&k, &r, &eps).all_passed());
    assert_eq!(k.sup_norm(), PiRational::pi_multiple(q(49, 400)));
}

#[test]
fn profile_json_round_trip() {
    let k = make_killer(&q(1, 2), &q(1, 10)).unwrap();
    let text = serde_json::to_string(&k).unwrap();
    let back: RadialProfile = serde_json::from_str(&text).unwrap();
    assert_eq!(back, k);
}

proptest! {
    #[test]
    fn killers_validate((r, eps) in shells()) {
        let k = make_killer(&r, &eps).unwrap();
        let v = validate_killer(&k, &r, &eps);
        prop_assert!(v.all_passed(), "{:?}", v.failed());
    }

    #[test]
    fn perturbed_plateau_fails((r, eps) in shells(), bump in 1i64..50) {
        let k = make_killer(&r, &eps).unwrap();
        let mut nodes = k.nodes().to_vec();
        nodes[1].value = &nodes[1].value + PiRational::from_rational(q(bump, 1000));
        let bad = RadialProfile::new(nodes).unwrap();
        prop_assert!(!validate_killer(&bad, &r, &eps).all_passed());
    }

    #[test]
    fn orbit_circles_match_dense_scan(p in profiles()) {
        let circles = orbit_circles(&p).unwrap();
        let mut expected = Vec::new();
        for c in p.corners() {
            let (lo, hi) = if c.slope_left < c.slope_right {
                (c.slope_left.clone(), c.slope_right.clone())
            } else {
                (c.slope_right.clone(), c.slope_left.clone())
            };
            for l in -64i64..=64 {
                let two_pi_l = PiRational::pi_multiple(q(2 * l, 1));
                if l != 0 && lo < two_pi_l && two_pi_l < hi {
                    expected.push((c.s.clone(), l));
                }
            }
        }
        let got: Vec<_> = circles.iter().map(|c| (c.s_star.clone(), c.l)).collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn concavity_follows_slope_jump(p in profiles()) {
        for c in p.corners() {
            let convex = c.slope_right > c.slope_left;
            prop_assert_eq!(c.concavity() == Concavity::Convex, convex);
        }
    }

    #[test]
    fn evaluation_is_linear_between_nodes(p in profiles(), t in 0i64..=8) {
        let nodes = p.nodes();
        for w in nodes.windows(2) {
            let s = &w[0].s + (&w[1].s - &w[0].s) * q(t, 8);
            let expected = &w[0].value + (&w[1].value - &w[0].value).scale(&q(t, 8));
            prop_assert_eq!(p.evaluate(&s), expected);
        }
        prop_assert!(p.evaluate(&(&nodes[nodes.len() - 1].s + q(1, 1))).is_zero());
    }
}
