mod common;

use common::{adaptive_simpson, params, random_member, rng};
use disperse_core::likelihood::{
    expected_log_ratio_increment, f_values, log_likelihood, log_likelihood_ratio, sn_decomposition,
    w_values,
};
use disperse_core::simulate::{grid_time, sample_observations};
use disperse_core::stats::{mean, variance};
use disperse_core::{DispersionFn, SeedRecord};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn likelihood_matches_density_product() {
    let p = params();
    let mut r = rng(7);
    for case in 0..50 {
        let s = random_member(&mut r, &p, 6);
        let s0 = random_member(&mut r, &p, 6);
        let n = r.random_range(1..=64);
        let obs = sample_observations(&s0, n, SeedRecord::new(case, 1)).unwrap();
        let oracle: f64 = (1..=n)
            .map(|i| {
                let (a, b) = (grid_time(i - 1, n), grid_time(i, n));
                let v = adaptive_simpson(&|t| s.eval(t).unwrap().powi(2), a, b, 1e-15);
                let y = obs.increments()[i - 1];
                ((-y * y / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()).ln()
            })
            .sum();
        assert!((log_likelihood(&s, &obs).unwrap() - oracle).abs() < 1e-10);
    }
}

#[test]
fn identity_suite() {
    let p = params();
    let mut r = rng(8);
    for case in 0..1000 {
        let s = random_member(&mut r, &p, 6);
        let s0 = random_member(&mut r, &p, 6);
        let n = r.random_range(1..=64);
        let obs = sample_observations(&s0, n, SeedRecord::new(case, 2)).unwrap();
        let lr = log_likelihood_ratio(&s, &s0, &obs).unwrap();
        let diff = log_likelihood(&s, &obs).unwrap() - log_likelihood(&s0, &obs).unwrap();
        assert!((lr - diff).abs() < 1e-10);
        let d = sn_decomposition(&s, &s0, &obs);
        assert!((d.total - (d.martingale_term + d.deterministic_term)).abs() < 1e-10);
        assert!((d.total - lr / n as f64).abs() < 1e-10);
        let back = log_likelihood_ratio(&s0, &s, &obs).unwrap();
        assert!((lr + back).abs() < 1e-10);
    }
}

#[test]
fn w_has_mean_zero_and_variance_two() {
    let s0 = DispersionFn::linear(1.0, 1.5);
    let n = 1000;
    let w: Vec<f64> = (0..1000)
        .flat_map(|r| {
            w_values(
                &sample_observations(&s0, n, SeedRecord::new(9, r)).unwrap(),
                &s0,
            )
        })
        .collect();
    let (m, v) = (mean(&w), variance(&w));
    let len = w.len() as f64;
    assert!(m.abs() < 3.0 * (v / len).sqrt());
    let fourth: Vec<f64> = w.iter().map(|x| (x - m).powi(2)).collect();
    let se_var = (variance(&fourth) / len).sqrt();
    assert!((v - 2.0).abs() < 3.0 * se_var, "variance {v}");
}

#[test]
fn kl_increment_matches_monte_carlo() {
    let p = params();
    let mut r = rng(10);
    let draws = 100_000;
    for _ in 0..20 {
        let s = random_member(&mut r, &p, 5);
        let s0 = random_member(&mut r, &p, 5);
        let n = r.random_range(1..=32);
        let i = r.random_range(1..=n);
        let (a, b) = (grid_time(i - 1, n), grid_time(i, n));
        let (v, v0) = (s.integral_sq(a, b).unwrap(), s0.integral_sq(a, b).unwrap());
        let z: Vec<f64> = (0..draws)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut r);
                let y2 = v0 * e * e;
                0.5 * (v0 / v).ln() - 0.5 * y2 * (1.0 / v - 1.0 / v0)
            })
            .collect();
        let exact = expected_log_ratio_increment(&s, &s0, i, n).unwrap();
        let se = (variance(&z) / draws as f64).sqrt();
        assert!((mean(&z) - exact).abs() < 3.0 * se);
        assert!(exact <= 0.0);
    }
}

#[test]
fn expected_log_ratio_sum_is_nonpositive() {
    let p = params();
    let mut r = rng(11);
    for _ in 0..500 {
        let s = random_member(&mut r, &p, 6);
        let s0 = random_member(&mut r, &p, 6);
        let n = r.random_range(1..=64);
        let f = f_values(&s, &s0, n);
        let total = disperse_core::likelihood::expected_log_ratio_sum(&f);
        assert!(total <= 0.0);
        let same = f_values(&s, &s, n);
        assert_eq!(
            disperse_core::likelihood::expected_log_ratio_sum(&same),
            0.0
        );
    }
}
