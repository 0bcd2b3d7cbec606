//! Gaussian increment likelihood and the quantities derived from it.
//!
//! With `v_i = int_{(i-1)/n}^{i/n} s^2` the observations have log-likelihood
//! `sum_i [-1/2 log(2 pi v_i) - Y_i^2 / (2 v_i)]`. Everything is kept in log
//! space; the product form underflows long before `n` gets interesting.
//!
//! For a candidate `s` and the truth `s0` write `v0_i` for the true
//! variances. Then
//!
//! * `f_i = (v0_i - v_i) / v_i` (the relative variance error),
//! * `W_i = 1 - Y_i^2 / v0_i` (centred, variance 2 under `s0`),
//! * `log R_n(s) = sum_i 1/2 [W_i f_i + log(1 + f_i) - f_i]`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::DispersionFn;
use crate::simulate::{increment_variances, Observations};

/// `log R_n(s) / n` split into its martingale and deterministic parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnDecomposition {
    /// `(1/2n) sum W_i f_i`
    pub martingale_term: f64,
    /// `(1/2n) sum [log(1 + f_i) - f_i]`, never positive.
    pub deterministic_term: f64,
    pub total: f64,
}

/// Log density of `N(0, var)` at `y`.
#[inline]
pub fn gaussian_log_density(y: f64, var: f64) -> f64 {
    -0.5 * libm::log(2.0 * PI * var) - 0.5 * y * y / var
}

/// `log p_s(y) - log p_0(y)` for centred Gaussians with variances `var` and
/// `var0`. Written so that swapping the variances negates it exactly.
#[inline]
pub fn log_density_ratio(y: f64, var: f64, var0: f64) -> f64 {
    0.5 * (libm::log(var0) - libm::log(var)) - 0.5 * y * y * (1.0 / var - 1.0 / var0)
}

fn check_variances(v: &[f64]) -> Result<()> {
    match v.iter().position(|&x| x.is_nan() || x <= 0.0) {
        Some(index) => Err(Error::DegenerateVariance {
            index,
            variance: v[index],
        }),
        None => Ok(()),
    }
}

/// Log-likelihood of `obs` under dispersion `s`.
pub fn log_likelihood(s: &DispersionFn, obs: &Observations) -> Result<f64> {
    let v = increment_variances(s, obs.n());
    log_likelihood_from_variances(&v, obs.increments())
}

pub fn log_likelihood_from_variances(variances: &[f64], increments: &[f64]) -> Result<f64> {
    check_variances(variances)?;
    Ok(variances
        .iter()
        .zip(increments)
        .map(|(&v, &y)| gaussian_log_density(y, v))
        .sum())
}

/// `log L_n(s) - log L_n(s0)`, accumulated term by term.
pub fn log_likelihood_ratio(
    s: &DispersionFn,
    s0: &DispersionFn,
    obs: &Observations,
) -> Result<f64> {
    let v = increment_variances(s, obs.n());
    let v0 = increment_variances(s0, obs.n());
    log_ratio_from_variances(&v, &v0, obs.increments())
}

pub fn log_ratio_from_variances(v: &[f64], v0: &[f64], increments: &[f64]) -> Result<f64> {
    check_variances(v)?;
    check_variances(v0)?;
    Ok(increments
        .iter()
        .zip(v.iter().zip(v0))
        .map(|(&y, (&a, &b))| log_density_ratio(y, a, b))
        .sum())
}

/// `f_i = int (s0^2 - s^2) / int s^2` over each grid cell.
pub fn f_values(s: &DispersionFn, s0: &DispersionFn, n: usize) -> Vec<f64> {
    let v = increment_variances(s, n);
    let v0 = increment_variances(s0, n);
    f_from_variances(&v, &v0)
}

pub fn f_from_variances(v: &[f64], v0: &[f64]) -> Vec<f64> {
    v.iter().zip(v0).map(|(&a, &b)| (b - a) / a).collect()
}

/// `W_i = 1 - Y_i^2 / int s0^2`.
pub fn w_values(obs: &Observations, s0: &DispersionFn) -> Vec<f64> {
    let v0 = increment_variances(s0, obs.n());
    w_from_variances(obs.increments(), &v0)
}

pub fn w_from_variances(increments: &[f64], v0: &[f64]) -> Vec<f64> {
    increments
        .iter()
        .zip(v0)
        .map(|(&y, &v)| 1.0 - y * y / v)
        .collect()
}

/// `log(1 + f) - f`, accurate for small `f`.
#[inline]
pub fn log1p_minus(f: f64) -> f64 {
    libm::log1p(f) - f
}

pub fn sn_decomposition(
    s: &DispersionFn,
    s0: &DispersionFn,
    obs: &Observations,
) -> SnDecomposition {
    let n = obs.n();
    let v = increment_variances(s, n);
    let v0 = increment_variances(s0, n);
    decomposition_from_parts(
        &f_from_variances(&v, &v0),
        &w_from_variances(obs.increments(), &v0),
    )
}

pub fn decomposition_from_parts(f: &[f64], w: &[f64]) -> SnDecomposition {
    let scale = 0.5 / f.len() as f64;
    let martingale_term = scale * f.iter().zip(w).map(|(f, w)| w * f).sum::<f64>();
    let deterministic_term = scale * f.iter().map(|&f| log1p_minus(f)).sum::<f64>();
    SnDecomposition {
        martingale_term,
        deterministic_term,
        total: martingale_term + deterministic_term,
    }
}

/// `E[Z_i]` under the truth, `Z_i = log p_s(Y_i) - log p_0(Y_i)`, for the
/// 1-based cell index `i`. Equals minus the KL divergence between the two
/// Gaussian increment laws: `1/2 [log(1 + f_i) - f_i]`.
pub fn expected_log_ratio_increment(
    s: &DispersionFn,
    s0: &DispersionFn,
    i: usize,
    n: usize,
) -> Result<f64> {
    if i == 0 || i > n {
        return Err(Error::Config(alloc::format!(
            "cell index {i} outside 1..={n}"
        )));
    }
    let (a, b) = (
        crate::simulate::grid_time(i - 1, n),
        crate::simulate::grid_time(i, n),
    );
    let v = s.integral_sq_unchecked(a, b);
    let v0 = s0.integral_sq_unchecked(a, b);
    Ok(0.5 * log1p_minus((v0 - v) / v))
}

/// `sum_i E[Z_i]` from precomputed `f` values.
pub fn expected_log_ratio_sum(f: &[f64]) -> f64 {
    0.5 * f.iter().map(|&x| log1p_minus(x)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

    #[test]
    fn standard_normal_density() {
        let s = DispersionFn::constant(1.0);
        let at_zero = Observations::from_values(vec![0.0, 0.0], None).unwrap();
        let at_one = Observations::from_values(vec![0.0, 1.0], None).unwrap();
        assert!((log_likelihood(&s, &at_zero).unwrap() + HALF_LOG_2PI).abs() < 1e-15);
        assert!((log_likelihood(&s, &at_one).unwrap() + HALF_LOG_2PI + 0.5).abs() < 1e-15);
    }

    #[test]
    fn ratio_between_constants() {
        let obs = Observations::from_values(vec![0.0, 1.0], None).unwrap();
        let s0 = DispersionFn::constant(1.0);
        let s = DispersionFn::constant(libm::sqrt(2.0));
        let r = log_likelihood_ratio(&s, &s0, &obs).unwrap();
        assert!((r - (-0.096_573_590_279_972_64)).abs() < 1e-12);
        assert_eq!(log_likelihood_ratio(&s0, &s0, &obs).unwrap(), 0.0);
        assert_eq!(log_likelihood_ratio(&s0, &s, &obs).unwrap(), -r);

        let d = sn_decomposition(&s, &s0, &obs);
        assert!((f_values(&s, &s0, 1)[0] + 0.5).abs() < 1e-15);
        assert!(w_values(&obs, &s0)[0].abs() < 1e-15);
        assert!(d.martingale_term.abs() < 1e-15);
        assert!((d.deterministic_term - 0.5 * (libm::log(0.5) + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn identical_functions_give_zero_decomposition() {
        let obs = Observations::from_values(vec![0.0, 0.3, -0.2], None).unwrap();
        let s = DispersionFn::linear(1.0, 1.5);
        let d = sn_decomposition(&s, &s, &obs);
        assert_eq!(
            (d.martingale_term, d.deterministic_term, d.total),
            (0.0, 0.0, 0.0)
        );
        assert!(f_values(&s, &s, 5).iter().all(|&f| f == 0.0));
    }

    #[test]
    fn w_special_cases() {
        let s0 = DispersionFn::constant(2.0);
        let still = Observations::from_values(vec![0.0; 5], None).unwrap();
        assert!(w_values(&still, &s0).iter().all(|&w| w == 1.0));
        // Y^2 = v exactly: v = 4/1, Y = 2
        let exact = Observations::from_values(vec![0.0, 2.0], None).unwrap();
        assert_eq!(w_values(&exact, &s0), vec![0.0]);
    }

    #[test]
    fn kl_increment_between_constants() {
        let s0 = DispersionFn::constant(1.0);
        let s = DispersionFn::constant(libm::sqrt(2.0));
        for (i, n) in [(1, 1), (3, 7), (10, 10)] {
            let e = expected_log_ratio_increment(&s, &s0, i, n).unwrap();
            assert!((e - (0.5 * libm::log(0.5) + 0.25)).abs() < 1e-14);
        }
        assert_eq!(expected_log_ratio_increment(&s0, &s0, 2, 4).unwrap(), 0.0);
        assert!(expected_log_ratio_increment(&s, &s0, 0, 4).is_err());
        assert!(expected_log_ratio_increment(&s, &s0, 5, 4).is_err());
    }

    #[test]
    fn degenerate_variance_is_reported() {
        let zero = DispersionFn::constant(0.0);
        let obs = Observations::from_values(vec![0.0, 1.0], None).unwrap();
        assert!(matches!(
            log_likelihood(&zero, &obs),
            Err(Error::DegenerateVariance { index: 0, .. })
        ));
    }

    #[test]
    fn huge_samples_stay_finite() {
        let n = 1_000_000;
        let s = DispersionFn::linear(0.5, 2.0);
        let values: Vec<f64> = (0..=n)
            .map(|i| if i % 2 == 0 { 0.0 } else { 1e3 })
            .collect();
        let obs = Observations::from_values(values, None).unwrap();
        let ll = log_likelihood(&s, &obs).unwrap();
        assert!(ll.is_finite());
    }
}
