use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use spectral_killers::calculus::{
    derive_nonneg, derive_theorem_bound, nonneg_witness, pb_lower_bound_radius, zeta_of_capped_family, BallSpec,
    Bound, BoundTrace, Interval, Quantity, Rule,
};
use spectral_killers::exact::PiRational;
use spectral_killers::floer::ManifoldModel;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn model() -> ManifoldModel {
    ManifoldModel::monotone(1, q(-1, 1), 1).unwrap()
}

#[test]
fn three_balls_give_largest_area() {
    let balls: Vec<BallSpec> = [q(1, 5), q(3, 10), q(1, 4)].into_iter().map(BallSpec::new).collect();
    let t = derive_theorem_bound(&balls, &model()).unwrap();
    assert!(t.audit().is_empty());
    let last = t.last().unwrap();
    assert_eq!(last.quantity, Quantity::Spectral("H".into()));
    assert_eq!(last.interval, Interval::closed(PiRational::zero(), PiRational::pi_multiple(q(9, 100))));
    assert!(t.facts.iter().any(|f| matches!(f.rule, Rule::Nonnegativity { .. })));
}

#[test]
fn tampered_fact_fails_audit() {
    let balls: Vec<BallSpec> = [q(1, 5), q(3, 10)].into_iter().map(BallSpec::new).collect();
    let mut t = derive_theorem_bound(&balls, &model()).unwrap();
    let last = t.facts.len() - 1;
    t.facts[last].interval = Interval::closed(PiRational::zero(), PiRational::pi_multiple(q(1, 100)));
    let failures = t.audit();
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0].fact_id, t.facts[last].fact_id);

    let mut t = derive_theorem_bound(&balls, &model()).unwrap();
    t.facts[3].premises.clear();
    assert!(!t.audit().is_empty());
}

#[test]
fn oversized_ball_is_rejected() {
    let balls = vec![BallSpec::new(q(1, 2))];
    assert!(derive_theorem_bound(&balls, &model()).is_err());
}

#[test]
fn nonneg_witness_frozen() {
    let e = PiRational::pi_multiple(q(1, 4));
    assert_eq!(nonneg_witness(&e, &PiRational::pi_multiple(q(1, 8))).unwrap(), 5);
    assert_eq!(nonneg_witness(&e, &PiRational::pi_multiple(q(1, 3))).unwrap(), 2);
    let t = derive_nonneg(e, None).unwrap();
    assert!(t.audit().is_empty());
    assert_eq!(t.last().unwrap().interval, Interval::closed(PiRational::zero(), PiRational::pi_multiple(q(1, 4))));
}

#[test]
fn zeta_of_color_class_vanishes() {
    let (t, id) = zeta_of_capped_family(PiRational::pi_multiple(q(1, 16))).unwrap();
    assert!(t.audit().is_empty());
    assert_eq!(t.fact(id).unwrap().interval, Interval::point(PiRational::zero()));
}

#[test]
fn bound_partial_order() {
    let a = Bound::constant(PiRational::from_int(1));
    let b = Bound { constant: PiRational::from_int(2), t_coeff: q(1, 1) };
    assert!(a.le(&b));
    assert!(!b.le(&a));
    assert!(!Bound::t(q(1, 1)).le(&a));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn theorem_bound_for_random_disjoint_balls(radii in prop::collection::vec(1i64..=39, 1..5)) {
        let balls: Vec<BallSpec> = radii.iter().map(|r| BallSpec::new(q(*r, 100))).collect();
        let t = derive_theorem_bound(&balls, &model()).unwrap();
        prop_assert!(t.audit().is_empty());
        let rmax = *radii.iter().max().unwrap();
        let expected = Interval::closed(PiRational::zero(), PiRational::pi_multiple(q(rmax * rmax, 10_000)));
        prop_assert_eq!(&t.last().unwrap().interval, &expected);
        let text = serde_json::to_string(&t).unwrap();
        let back: BoundTrace = serde_json::from_str(&text).unwrap();
        prop_assert!(back.audit().is_empty());
        prop_assert_eq!(back, t);
    }

    #[test]
    fn pb_constant_is_exact(d in 1u32..=12, p in 1i64..1000, den in 1i64..1000) {
        let (b, trace) = pb_lower_bound_radius(d, &q(p, den)).unwrap();
        prop_assert_eq!(b.times_area() * BigRational::from_integer(BigInt::from(2 * d * d)), q(1, 1));
        prop_assert!(trace.audit().is_empty());
    }
}
