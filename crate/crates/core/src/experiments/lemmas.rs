//! Numerical checks of the bounds used to prove the contraction rate.
//!
//! Suprema over infinite function sets are replaced by maxima over (seeded
//! subsamples of) net members, so every reported supremum is a lower bound on
//! the true one.

use alloc::vec::Vec;

use rand::Rng;

use crate::design::GridDesign;
use crate::error::{Error, Result};
use crate::likelihood::{f_from_variances, log1p_minus, w_from_variances};
use crate::model::{merge_grids, DispersionFn, Metric};
use crate::prior::{shell_partition, NetPrior, Shell};
use crate::quad::GaussLegendre;
use crate::rng::{stream_id, substream};
use crate::simulate::{increment_variances, sample_observations, SeedRecord};
use crate::stats::quantile;

/// Stream group of the martingale-check replicates.
pub const MARTINGALE_GROUP: u32 = 0x4d41_5254;
/// Stream group of the ratio-tail replicates.
pub const TAIL_GROUP: u32 = 0x5441_494c;

/// Riemann-sum identity and the lower bounds on the deterministic part of
/// `log R_n / n` for one pair `(s, s0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannCheck {
    pub n: usize,
    /// `(1/2n) sum [log(1 + f_i) - f_i]`
    pub deterministic_term: f64,
    /// `-(1/2)(1/n) sum f_i^2`
    pub riemann_sum: f64,
    /// `-(1/2) int (s0^2 - s^2)^2 / s^4`
    pub integral: f64,
    /// `|riemann_sum - integral|`, of order `1/n`.
    pub residual: f64,
    /// `|(1/2n) sum [log(1 + f_i) - f_i + f_i^2 / 2]|`
    pub log_quadratic_gap: f64,
    /// `(1/2n) sum |f_i|^3`, which bounds the gap when every `|f_i| <= 1/2`.
    pub cubic_bound: f64,
    /// `max |f_i|`
    pub max_abs_f: f64,
    /// `-(2 K^2 / kappa^4) ||s - s0||_inf^2`, a lower bound for `integral`.
    pub sup_lower_bound: f64,
}

impl RiemannCheck {
    /// `deterministic_term >= riemann_sum` holds whenever `max |f| < 1/2`.
    pub fn crude_bound_holds(&self) -> bool {
        self.max_abs_f >= 0.5 || self.deterministic_term >= self.riemann_sum
    }
}

/// `-(1/2) int_0^1 (s0^2 - s^2)^2 / s^4`, by Gauss-Legendre on each piece of
/// the merged knot grid (the integrand is smooth there).
pub fn relative_gap_integral(s: &DispersionFn, s0: &DispersionFn) -> f64 {
    let gl = GaussLegendre::new(24);
    let grid = merge_grids(s.knots(), s0.knots());
    let g2 = |u: f64| {
        let a = s.value_at(u);
        let b = s0.value_at(u);
        let g = (b * b - a * a) / (a * a);
        g * g
    };
    -0.5 * grid
        .windows(2)
        .map(|w| gl.integrate_panels(g2, w[0], w[1], 4))
        .sum::<f64>()
}

pub fn verify_riemann_identity(
    s: &DispersionFn,
    s0: &DispersionFn,
    n: usize,
    k_upper: f64,
    kappa: f64,
) -> RiemannCheck {
    let v = increment_variances(s, n);
    let v0 = increment_variances(s0, n);
    let f = f_from_variances(&v, &v0);
    let scale = 0.5 / n as f64;
    let deterministic_term = scale * f.iter().map(|&x| log1p_minus(x)).sum::<f64>();
    let riemann_sum = -scale * f.iter().map(|x| x * x).sum::<f64>();
    let integral = if s == s0 {
        0.0
    } else {
        relative_gap_integral(s, s0)
    };
    let log_quadratic_gap =
        (scale * f.iter().map(|&x| log1p_minus(x) + 0.5 * x * x).sum::<f64>()).abs();
    let cubic_bound = scale
        * f.iter()
            .map(|x| {
                let a = x.abs();
                a * a * a
            })
            .sum::<f64>();
    let max_abs_f = f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let sup = s.distance(s0, Metric::Sup);
    let sup_lower_bound = -2.0 * k_upper * k_upper / libm::pow(kappa, 4.0) * sup * sup;
    RiemannCheck {
        n,
        deterministic_term,
        riemann_sum,
        integral,
        residual: (riemann_sum - integral).abs(),
        log_quadratic_gap,
        cubic_bound,
        max_abs_f,
        sup_lower_bound,
    }
}

/// `inf (x - log(1 + x)) / x^2` over the attainable range of `f`, evaluated
/// on a fine grid including both endpoints.
pub fn kl_curvature_constant(params: &crate::model::ClassParams) -> f64 {
    let (lo, hi) = params.f_range();
    let phi = |x: f64| {
        if x.abs() < 1e-6 {
            0.5 - x / 3.0 + x * x / 4.0
        } else {
            -log1p_minus(x) / (x * x)
        }
    };
    let steps = 20_000;
    (0..=steps)
        .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
        .map(phi)
        .fold(f64::INFINITY, f64::min)
}

/// Outcome of scanning every shell member of a net against the bound
/// `sum_i E[Z_i] <= -(c0 kappa^2 / K^4) 2^j eps^2 n + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct KlBoundReport {
    pub c_tilde0: f64,
    pub offset: f64,
    /// `min over shell members of (bound - sum E[Z])`; non-negative means
    /// the bound holds on the whole net.
    pub min_slack: f64,
    pub evaluated: usize,
    /// `(ring j, members, min slack in that ring)`
    pub per_ring: Vec<(u32, usize, f64)>,
}

impl KlBoundReport {
    pub fn holds(&self) -> bool {
        self.min_slack >= 0.0
    }
}

fn ring_sums(net: &NetPrior, s0: &DispersionFn, eps: f64, n: usize) -> Vec<(u32, f64)> {
    let shells = shell_partition(net, s0, eps);
    let design = GridDesign::new(net.knots().clone(), n);
    let v0 = increment_variances(s0, n);
    net.members()
        .iter()
        .zip(&shells.assignment)
        .filter_map(|(m, shell)| match shell {
            Shell::Inside => None,
            Shell::Ring(j) => {
                let sum: f64 = (0..n)
                    .map(|i| {
                        let v = design.variance(m.values(), i);
                        0.5 * log1p_minus((v0[i] - v) / v)
                    })
                    .sum();
                Some((*j, sum))
            }
        })
        .collect()
}

fn kl_bound_term(net: &NetPrior, c_tilde0: f64, ring: u32, eps: f64, n: usize) -> f64 {
    let p = net.params();
    -(c_tilde0 * p.kappa * p.kappa / libm::pow(p.k_upper, 4.0))
        * libm::ldexp(eps * eps, ring as i32)
        * n as f64
}

/// Smallest non-negative offset making the bound hold on `net` at `(eps, n)`.
pub fn fit_kl_offset(net: &NetPrior, s0: &DispersionFn, eps: f64, n: usize, c_tilde0: f64) -> f64 {
    ring_sums(net, s0, eps, n)
        .into_iter()
        .map(|(j, sum)| sum - kl_bound_term(net, c_tilde0, j, eps, n))
        .fold(0.0, f64::max)
}

pub fn verify_kl_bound(
    net: &NetPrior,
    s0: &DispersionFn,
    eps: f64,
    n: usize,
    c_tilde0: f64,
    offset: f64,
) -> KlBoundReport {
    let sums = ring_sums(net, s0, eps, n);
    let mut per_ring: Vec<(u32, usize, f64)> = Vec::new();
    let mut min_slack = f64::INFINITY;
    for (j, sum) in &sums {
        let slack = kl_bound_term(net, c_tilde0, *j, eps, n) + offset - sum;
        min_slack = min_slack.min(slack);
        match per_ring.iter_mut().find(|r| r.0 == *j) {
            Some(r) => {
                r.1 += 1;
                r.2 = r.2.min(slack);
            }
            None => per_ring.push((*j, 1, slack)),
        }
    }
    per_ring.sort_by_key(|r| r.0);
    KlBoundReport {
        c_tilde0,
        offset,
        min_slack,
        evaluated: sums.len(),
        per_ring,
    }
}

/// Indices of `pool`, or a seeded subsample of `cap` of them.
fn subsample(mut pool: Vec<usize>, cap: usize, seed: SeedRecord) -> Vec<usize> {
    if pool.len() <= cap {
        return pool;
    }
    let mut rng = substream(seed.base_seed, seed.stream);
    for k in 0..cap {
        let pick = rng.random_range(k..pool.len());
        pool.swap(k, pick);
    }
    pool.truncate(cap);
    pool.sort_unstable();
    pool
}

/// Supremum statistic of the martingale part over the sup-norm ball.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleSupSummary {
    pub n: usize,
    pub eps_tilde: f64,
    pub members_used: usize,
    /// Per replicate: `max |(1/n) sum W_i f_i|` over the used members.
    pub per_replicate: Vec<f64>,
    pub p95: f64,
    /// `p95 / eps_tilde^2`
    pub ratio: f64,
}

/// `sup |(1/n) sum W_i f_s(z_i)|` over net members with
/// `||s - s0||_inf < eps_tilde`, one value per replicate.
pub fn verify_martingale_sup(
    net: &NetPrior,
    s0: &DispersionFn,
    eps_tilde: f64,
    n: usize,
    reps: usize,
    base_seed: u64,
    cap: usize,
) -> Result<MartingaleSupSummary> {
    if reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let pool: Vec<usize> = (0..net.len())
        .filter(|&k| net.members()[k].distance(s0, Metric::Sup) < eps_tilde)
        .collect();
    if pool.is_empty() {
        return Err(Error::EmptyRestriction);
    }
    let chosen = subsample(
        pool,
        cap,
        SeedRecord::new(base_seed, stream_id(MARTINGALE_GROUP, u32::MAX)),
    );
    let design = GridDesign::new(net.knots().clone(), n);
    let v0 = increment_variances(s0, n);
    let fs: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&k| f_from_variances(&design.variances(net.members()[k].values()), &v0))
        .collect();

    let per_replicate = (0..reps)
        .map(|r| {
            let obs = sample_observations(
                s0,
                n,
                SeedRecord::new(base_seed, stream_id(MARTINGALE_GROUP, r as u32)),
            )?;
            let w = w_from_variances(obs.increments(), &v0);
            Ok(fs
                .iter()
                .map(|f| (f.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / n as f64).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let p95 = quantile(&per_replicate, 0.95);
    Ok(MartingaleSupSummary {
        n,
        eps_tilde,
        members_used: chosen.len(),
        per_replicate,
        p95,
        ratio: p95 / (eps_tilde * eps_tilde),
    })
}

/// Empirical probability that some far-away member keeps a large
/// likelihood ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSummary {
    pub n: usize,
    pub eps_n: f64,
    pub c1: f64,
    pub members_used: usize,
    pub hits: usize,
    pub reps: usize,
    /// Per replicate: `max log R_n(s)` over the used members.
    pub max_log_ratio: Vec<f64>,
}

impl TailSummary {
    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.reps as f64
    }
}

/// Fraction of replicates with `max log R_n(s) >= -c1 n eps_n^2` over net
/// members outside the L2 ball `||s - s0||_2 < eps_n`.
#[allow(clippy::too_many_arguments)]
pub fn verify_ratio_tail(
    net: &NetPrior,
    s0: &DispersionFn,
    eps_n: f64,
    n: usize,
    c1: f64,
    reps: usize,
    base_seed: u64,
    cap: usize,
) -> Result<TailSummary> {
    if reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let pool: Vec<usize> = (0..net.len())
        .filter(|&k| net.members()[k].distance(s0, Metric::L2) >= eps_n)
        .collect();
    if pool.is_empty() {
        return Err(Error::EmptyRestriction);
    }
    let chosen = subsample(
        pool,
        cap,
        SeedRecord::new(base_seed, stream_id(TAIL_GROUP, u32::MAX)),
    );
    let design = GridDesign::new(net.knots().clone(), n);
    let v0 = increment_variances(s0, n);
    let log_v0: Vec<f64> = v0.iter().map(|&v| libm::log(v)).collect();
    // log R_n(s) = offset_s - 1/2 sum_i coef_{s,i} Y_i^2
    let forms: Vec<(f64, Vec<f64>)> = chosen
        .iter()
        .map(|&k| {
            let v = design.variances(net.members()[k].values());
            let offset = 0.5
                * v.iter()
                    .zip(&log_v0)
                    .map(|(&a, &lb)| lb - libm::log(a))
                    .sum::<f64>();
            let coef = v
                .iter()
                .zip(&v0)
                .map(|(&a, &b)| 1.0 / a - 1.0 / b)
                .collect();
            (offset, coef)
        })
        .collect();
    let threshold = -c1 * n as f64 * eps_n * eps_n;

    let max_log_ratio = (0..reps)
        .map(|r| {
            let obs = sample_observations(
                s0,
                n,
                SeedRecord::new(base_seed, stream_id(TAIL_GROUP, r as u32)),
            )?;
            let y2: Vec<f64> = obs.increments().iter().map(|y| y * y).collect();
            Ok(forms
                .iter()
                .map(|(off, coef)| {
                    off - 0.5 * coef.iter().zip(&y2).map(|(c, y)| c * y).sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let hits = max_log_ratio.iter().filter(|&&m| m >= threshold).count();
    Ok(TailSummary {
        n,
        eps_n,
        c1,
        members_used: chosen.len(),
        hits,
        reps,
        max_log_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassParams;
    use crate::prior::build_net;

    #[test]
    fn identical_pair_has_zero_residual() {
        let s = DispersionFn::linear(1.0, 1.4);
        let c = verify_riemann_identity(&s, &s, 64, 2.0, 0.5);
        assert_eq!(c.residual, 0.0);
        assert_eq!(c.deterministic_term, 0.0);
    }

    #[test]
    fn constants_one_and_one_point_one() {
        let s0 = DispersionFn::constant(1.0);
        let s = DispersionFn::constant(1.1);
        let c = verify_riemann_identity(&s, &s0, 16, 2.0, 0.5);
        let f: f64 = (1.0 - 1.21) / 1.21;
        assert!((c.integral - (-0.5 * f * f)).abs() < 1e-15);
        assert!((c.integral + 0.015_060_446_690_799_81).abs() < 1e-12);
        assert!(c.residual < 1e-15);
        // per-term log-vs-quadratic gap is bounded by |f|^3
        let gap = (log1p_minus(f) + 0.5 * f * f).abs();
        assert!(gap <= libm::pow(f.abs(), 3.0));
        assert!(c.log_quadratic_gap <= c.cubic_bound);
        assert!(c.crude_bound_holds());
        assert!(c.integral >= c.sup_lower_bound);
    }

    #[test]
    fn curvature_constant_is_attained_at_the_right_end() {
        let p = ClassParams::new(0.5, 2.0, 1.0).unwrap();
        let c0 = kl_curvature_constant(&p);
        let x = 15.0f64;
        assert!((c0 - (x - libm::log1p(x)) / (x * x)).abs() < 1e-12);
        let p = ClassParams::new(0.9, 1.1, 1.0).unwrap();
        assert!(kl_curvature_constant(&p) < 0.5 && kl_curvature_constant(&p) > 0.3);
    }

    #[test]
    fn kl_single_member_shell_sum() {
        // {s0 = 1, s = sqrt 2}: 10 cells each contributing 1/2 log(1/2) + 1/4
        let s0 = DispersionFn::constant(1.0);
        let s = DispersionFn::constant(libm::sqrt(2.0));
        let sum: f64 = (1..=10)
            .map(|i| crate::likelihood::expected_log_ratio_increment(&s, &s0, i, 10).unwrap())
            .sum();
        assert!((sum + 0.965_735_902_799_726_4).abs() < 1e-12);
    }

    #[test]
    fn subsample_is_seeded_and_sorted() {
        let pool: Vec<usize> = (0..100).collect();
        let a = subsample(pool.clone(), 10, SeedRecord::new(1, 2));
        let b = subsample(pool.clone(), 10, SeedRecord::new(1, 2));
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample(pool, 1000, SeedRecord::new(1, 2)).len(), 100);
    }

    #[test]
    fn singleton_martingale_statistic_is_zero() {
        let p = ClassParams::new(1.0, 1.2, 1.0).unwrap();
        let net = build_net(&p, 1.0).unwrap();
        assert_eq!(net.len(), 1);
        let s0 = net.members()[0].clone();
        let m = verify_martingale_sup(&net, &s0, 0.5, 100, 5, 3, 100).unwrap();
        assert!(m.per_replicate.iter().all(|&x| x == 0.0));
        // and the far-away restriction is empty
        assert_eq!(
            verify_ratio_tail(&net, &s0, 0.1, 100, 0.0, 5, 3, 100),
            Err(Error::EmptyRestriction)
        );
        let far = DispersionFn::constant(5.0);
        assert_eq!(
            verify_martingale_sup(&net, &far, 0.5, 100, 5, 3, 100),
            Err(Error::EmptyRestriction)
        );
    }
}
