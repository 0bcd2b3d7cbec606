mod common;

use common::{adaptive_simpson, params, random_member, rng};
use disperse_core::{DispersionFn, Metric};
use proptest::prelude::*;

#[test]
fn closed_form_integral_matches_adaptive_quadrature() {
    let p = params();
    let mut r = rng(101);
    for _ in 0..200 {
        let s = random_member(&mut r, &p, 8);
        let exact = s.integral_sq(0.0, 1.0).unwrap();
        let oracle = adaptive_simpson(&|t| s.eval(t).unwrap().powi(2), 0.0, 1.0, 1e-14);
        assert!(
            ((exact - oracle) / oracle).abs() < 1e-10,
            "{exact} vs {oracle}"
        );
    }
}

#[test]
fn symbolic_examples() {
    let s = DispersionFn::linear(1.0, 2.0);
    assert!((s.integral_sq(0.0, 1.0).unwrap() - 7.0 / 3.0).abs() < 1e-15);
    let one = DispersionFn::constant(1.0);
    assert_eq!(one.distance(&s, Metric::Sup), 1.0);
    assert!((one.distance(&s, Metric::L2) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
}

proptest! {
    #[test]
    fn l2_never_exceeds_sup(seed in any::<u64>()) {
        let p = params();
        let mut r = rng(seed);
        let a = random_member(&mut r, &p, 7);
        let b = random_member(&mut r, &p, 7);
        prop_assert!(a.distance(&b, Metric::L2) <= a.distance(&b, Metric::Sup) + 1e-12);
    }

    #[test]
    fn integral_is_additive(seed in any::<u64>(), x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let p = params();
        let s = random_member(&mut rng(seed), &p, 7);
        let (a, c) = (x.min(y), x.max(y));
        let b = 0.5 * (a + c);
        let whole = s.integral_sq(a, c).unwrap();
        let parts = s.integral_sq(a, b).unwrap() + s.integral_sq(b, c).unwrap();
        prop_assert!((whole - parts).abs() < 1e-12);
    }

    #[test]
    fn unit_integral_is_within_range_squares(seed in any::<u64>()) {
        let p = params();
        let s = random_member(&mut rng(seed), &p, 7);
        let v = s.integral_sq(0.0, 1.0).unwrap();
        prop_assert!(v >= p.kappa * p.kappa && v <= p.k_upper * p.k_upper);
        prop_assert!(s.is_member(&p));
    }

    #[test]
    fn eval_is_exact_at_knots(seed in any::<u64>()) {
        let s = random_member(&mut rng(seed), &params(), 7);
        for (t, v) in s.knots().iter().zip(s.values()) {
            prop_assert_eq!(s.eval(*t).unwrap(), *v);
        }
    }
}
