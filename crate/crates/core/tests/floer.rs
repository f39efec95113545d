use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use spectral_killers::exact::PiRational;
use spectral_killers::floer::{
    circle_index, index_n_solutions, recap, trivial_index, Branch, CappedOrbitClass, ManifoldModel, OrbitRow,
};
use spectral_killers::radial::{Concavity, OrbitCircle};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn circle(l: i64, convex: bool, s: i64) -> OrbitCircle {
    OrbitCircle {
        s_star: q(s, 64),
        l,
        concavity: if convex { Concavity::Convex } else { Concavity::Concave },
        f_value: PiRational::new(q(s, 7), q(-s, 9)),
    }
}

fn models() -> impl Strategy<Value = ManifoldModel> {
    (1u32..5, -9i64..=9, 1u32..4)
        .prop_filter("λ ≠ 0", |(_, l, _)| *l != 0)
        .prop_map(|(n, l, nn)| ManifoldModel::monotone(n, q(l, 3), nn).unwrap())
}

#[test]
fn trivial_orbit_index_frozen() {
    let m = ManifoldModel::monotone(1, q(-1, 1), 1).unwrap();
    assert_eq!(trivial_index(0, &m, 0).unwrap(), -1);
    assert_eq!(trivial_index(2, &m, 0).unwrap(), 1);
    assert_eq!(trivial_index(2, &m, -1).unwrap(), 3);
    assert!(trivial_index(3, &m, 0).is_err());
}

#[test]
fn aspherical_refuses_recap() {
    let m = ManifoldModel::aspherical(2).unwrap();
    let o = CappedOrbitClass::circle(circle(1, true, 3), Branch::Min, &m);
    assert!(recap(&o, 1, &m).is_err());
    assert_eq!(recap(&o, 0, &m).unwrap(), o);
}

#[test]
fn row_json_round_trip() {
    let m = ManifoldModel::monotone(2, q(-1, 1), 1).unwrap();
    let o = recap(&CappedOrbitClass::circle(circle(-2, false, 5), Branch::Max, &m), 3, &m).unwrap();
    let row = OrbitRow::from(&o);
    let back: OrbitRow = serde_json::from_str(&serde_json::to_string(&row).unwrap()).unwrap();
    assert_eq!(back, row);
}

proptest! {
    #[test]
    fn recap_shifts_index_and_action(model in models(), l in -6i64..=6, convex: bool, max: bool, s in 1i64..60, k in -5i64..=5) {
        prop_assume!(l != 0);
        let branch = if max { Branch::Max } else { Branch::Min };
        let o = CappedOrbitClass::circle(circle(l, convex, s), branch, &model);
        let a = k * model.chern_gen as i64;
        let r = recap(&o, a, &model).unwrap();
        prop_assert_eq!(r.index, o.index - 2 * a);
        let lambda = PiRational::from_rational(model.lambda.clone());
        prop_assert_eq!(r.action_value(&model), o.action_value(&model) - lambda.scale_int(a));
        prop_assert_eq!(r.index, circle_index(&circle(l, convex, s), branch, &model, a));
    }

    #[test]
    fn recap_composes(model in models(), a in -4i64..=4, b in -4i64..=4) {
        let n = model.chern_gen as i64;
        let o = CappedOrbitClass::trivial("p", PiRational::pi(), 0, &model).unwrap();
        let twice = recap(&recap(&o, a * n, &model).unwrap(), b * n, &model).unwrap();
        prop_assert_eq!(twice, recap(&o, (a + b) * n, &model).unwrap());
    }

    #[test]
    fn recap_outside_lattice_rejected(model in models(), a in 1i64..20) {
        prop_assume!(a % model.chern_gen as i64 != 0);
        let o = CappedOrbitClass::trivial("p", PiRational::zero(), 1, &model).unwrap();
        prop_assert!(recap(&o, a, &model).is_err());
    }

    #[test]
    fn index_n_solutions_are_complete(model in models(), l in -8i64..=8, convex: bool) {
        prop_assume!(l != 0);
        let c = circle(l, convex, 7);
        let sols = index_n_solutions(&c, &model);
        for &(branch, c1) in &sols {
            prop_assert_eq!(circle_index(&c, branch, &model, c1), model.n());
            prop_assert!(model.admits_c1(c1));
        }
        for branch in Branch::BOTH {
            for c1 in -40i64..=40 {
                if model.admits_c1(c1) && circle_index(&c, branch, &model, c1) == model.n() {
                    prop_assert!(sols.contains(&(branch, c1)));
                }
            }
        }
    }
}
