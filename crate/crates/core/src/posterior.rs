//! Posterior computation: exact enumeration over a net prior, and
//! Metropolis sampling over the continuous knot-value polytope.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::design::GridDesign;
use crate::error::{Error, Result};
use crate::likelihood::log_density_ratio;
use crate::model::{ClassParams, DispersionFn, Metric, SLOPE_RTOL};
use crate::prior::{NetPrior, DEFAULT_MEMBER_CAP};
use crate::rng::substream;
use crate::simulate::{Observations, SeedRecord};
use crate::stats::{batch_means_se, log_sum_exp};

/// Number of batches used for Monte Carlo standard errors of chain averages.
pub const SE_BATCHES: usize = 20;

/// A posterior given as weighted support points.
pub trait Posterior {
    /// Support points with weights summing to one.
    fn atoms(&self) -> Vec<(&DispersionFn, f64)>;
}

/// Exact posterior over the members of a net.
#[derive(Debug, Clone)]
pub struct DiscretePosterior<'a> {
    prior: &'a NetPrior,
    log_post: Vec<f64>,
}

impl<'a> DiscretePosterior<'a> {
    pub fn prior(&self) -> &'a NetPrior {
        self.prior
    }

    /// Normalised log posterior weights, one per prior member.
    pub fn log_post(&self) -> &[f64] {
        &self.log_post
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_post.iter().map(|&w| libm::exp(w)).collect()
    }

    /// Index of the heaviest member (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &w) in self.log_post.iter().enumerate() {
            if w > self.log_post[best] {
                best = k;
            }
        }
        best
    }
}

impl Posterior for DiscretePosterior<'_> {
    fn atoms(&self) -> Vec<(&DispersionFn, f64)> {
        self.prior.members().iter().zip(self.weights()).collect()
    }
}

/// Log-likelihood of every net member. Members share one knot grid, so the
/// variances come from a single [`GridDesign`].
pub fn net_log_likelihoods(prior: &NetPrior, obs: &Observations) -> Vec<f64> {
    let design = GridDesign::new(prior.knots().clone(), obs.n());
    let y = obs.increments();
    prior
        .members()
        .iter()
        .map(|m| {
            (0..obs.n())
                .map(|i| {
                    crate::likelihood::gaussian_log_density(y[i], design.variance(m.values(), i))
                })
                .sum()
        })
        .collect()
}

pub fn net_posterior<'a>(prior: &'a NetPrior, obs: &Observations) -> Result<DiscretePosterior<'a>> {
    if prior.len() > DEFAULT_MEMBER_CAP {
        return Err(Error::NetTooLarge {
            count: prior.len() as u128,
            cap: DEFAULT_MEMBER_CAP,
        });
    }
    let ll = net_log_likelihoods(prior, obs);
    net_posterior_from_loglik(prior, &ll)
}

/// Bayes' formula on the net for precomputed member log-likelihoods.
pub fn net_posterior_from_loglik<'a>(
    prior: &'a NetPrior,
    log_lik: &[f64],
) -> Result<DiscretePosterior<'a>> {
    if log_lik.len() != prior.len() {
        return Err(Error::Config(
            "one log-likelihood per member required".into(),
        ));
    }
    if log_lik.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
        return Err(Error::NonFiniteLikelihood(0));
    }
    let unnorm: Vec<f64> = prior
        .log_weights()
        .iter()
        .zip(log_lik)
        .map(|(w, l)| w + l)
        .collect();
    let z = log_sum_exp(&unnorm);
    if !z.is_finite() {
        return Err(Error::NonFiniteLikelihood(0));
    }
    Ok(DiscretePosterior {
        prior,
        log_post: unnorm.into_iter().map(|u| u - z).collect(),
    })
}

/// Posterior mass inside and outside an L2 ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMass {
    pub inside: f64,
    pub outside: f64,
}

pub fn posterior_ball_mass<P: Posterior + ?Sized>(
    post: &P,
    s0: &DispersionFn,
    radius: f64,
) -> Result<BallMass> {
    let atoms = post.atoms();
    if atoms.is_empty() {
        return Err(Error::EmptyChain);
    }
    let inside: f64 = atoms
        .iter()
        .filter(|(s, _)| s.distance(s0, Metric::L2) < radius)
        .map(|(_, w)| w)
        .sum::<f64>()
        .clamp(0.0, 1.0);
    Ok(BallMass {
        inside,
        outside: 1.0 - inside,
    })
}

/// Pointwise posterior mean of `s` on `grid`.
pub fn posterior_mean<P: Posterior + ?Sized>(post: &P, grid: &[f64]) -> Result<Vec<f64>> {
    let atoms = post.atoms();
    if atoms.is_empty() {
        return Err(Error::EmptyChain);
    }
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    grid.iter()
        .map(|&t| {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Domain(t));
            }
            let (mut acc, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
            for (s, w) in &atoms {
                let v = s.value_at(t);
                acc += w * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            Ok((acc / total).clamp(lo, hi))
        })
        .collect()
}

/// Settings for [`mcmc_posterior`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcConfig {
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Standard deviation of the single-site Gaussian proposal.
    pub step: f64,
    pub seed: SeedRecord,
    /// Sample the prior alone (debugging aid).
    pub likelihood_off: bool,
}

impl McmcConfig {
    /// Defaults: 20% burn-in, thinning 10, step `0.1 (k_upper - kappa)`.
    pub fn new(iters: usize, params: &ClassParams, seed: SeedRecord) -> Self {
        Self {
            iters,
            burn_in: iters / 5,
            thin: 10,
            step: 0.1 * params.range_width(),
            seed,
            likelihood_off: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iters <= self.burn_in {
            return Err(Error::Config("iters must exceed burn_in".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config("proposal step must be positive".into()));
        }
        Ok(())
    }
}

/// Thinned post-burn-in draws of a Metropolis chain.
#[derive(Debug, Clone)]
pub struct McmcChain {
    pub states: Vec<DispersionFn>,
    /// Iteration index of each kept state.
    pub iterations: Vec<usize>,
    /// Whether the proposal made at that iteration was accepted.
    pub accepted_at: Vec<bool>,
    pub accepted: u64,
    pub proposed: u64,
    pub acceptance_rate: f64,
    pub config: McmcConfig,
    pub params: ClassParams,
}

impl McmcChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `||s - s0||_2` for every kept state.
    pub fn l2_errors(&self, s0: &DispersionFn) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| s.distance(s0, Metric::L2))
            .collect()
    }

    /// Outside-ball mass with a batch-means standard error.
    pub fn outside_mass_with_se(&self, s0: &DispersionFn, radius: f64) -> Result<(f64, f64)> {
        let ind: Vec<f64> = self
            .l2_errors(s0)
            .into_iter()
            .map(|d| if d < radius { 0.0 } else { 1.0 })
            .collect();
        outside_from_errors(&ind)
    }
}

fn outside_from_errors(indicators: &[f64]) -> Result<(f64, f64)> {
    if indicators.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mean = indicators.iter().sum::<f64>() / indicators.len() as f64;
    Ok((mean, batch_means_se(indicators, SE_BATCHES)))
}

/// Outside-ball fraction and batch-means standard error from per-state
/// distances.
pub fn outside_fraction(errors: &[f64], radius: f64) -> Result<(f64, f64)> {
    let ind: Vec<f64> = errors
        .iter()
        .map(|&d| if d < radius { 0.0 } else { 1.0 })
        .collect();
    outside_from_errors(&ind)
}

impl Posterior for McmcChain {
    fn atoms(&self) -> Vec<(&DispersionFn, f64)> {
        let w = 1.0 / self.states.len() as f64;
        self.states.iter().map(|s| (s, w)).collect()
    }
}

/// Uniform knot grid with `knot_count` knots.
pub fn uniform_knots(knot_count: usize) -> Arc<[f64]> {
    let segs = knot_count - 1;
    (0..knot_count)
        .map(|j| j as f64 / segs as f64)
        .collect::<Vec<_>>()
        .into()
}

/// Random-walk Metropolis over `{v in [kappa, K]^knots : |v_{j+1} - v_j| <= M h}`
/// targeting the likelihood (uniform prior on the polytope).
///
/// Each iteration picks one knot uniformly and proposes a Gaussian step;
/// proposals leaving the polytope are rejected. The chain starts from the
/// constant `(kappa + K) / 2`.
pub fn mcmc_posterior(
    params: &ClassParams,
    knot_count: usize,
    obs: &Observations,
    config: &McmcConfig,
) -> Result<McmcChain> {
    if knot_count < 2 {
        return Err(Error::Config("knot_count must be at least 2".into()));
    }
    config.validate()?;
    let knots = uniform_knots(knot_count);
    let h = 1.0 / (knot_count - 1) as f64;
    let feasible_step = |a: f64, b: f64| (a - b).abs() / h <= params.m_lip * (1.0 + SLOPE_RTOL);

    let design = GridDesign::new(knots.clone(), obs.n());
    let y = obs.increments();
    let mut values = alloc::vec![params.mid_level(); knot_count];
    let mut var = design.variances(&values);
    let mut scratch: Vec<f64> = Vec::new();
    let mut rng = substream(config.seed.base_seed, config.seed.stream);

    let kept_cap = (config.iters - config.burn_in).div_ceil(config.thin);
    let mut states = Vec::with_capacity(kept_cap);
    let mut iterations = Vec::with_capacity(kept_cap);
    let mut accepted_at = Vec::with_capacity(kept_cap);
    let mut accepted = 0u64;

    for it in 0..config.iters {
        let j = rng.random_range(0..knot_count);
        let z: f64 = StandardNormal.sample(&mut rng);
        let prop = values[j] + config.step * z;
        let feasible = prop >= params.kappa
            && prop <= params.k_upper
            && (j == 0 || feasible_step(prop, values[j - 1]))
            && (j + 1 == knot_count || feasible_step(prop, values[j + 1]));

        let mut took = false;
        if feasible {
            if config.likelihood_off {
                values[j] = prop;
                took = true;
            } else {
                let old = values[j];
                values[j] = prop;
                let span = design.affected(j);
                scratch.clear();
                let mut delta = 0.0;
                for i in span.clone() {
                    let nv = design.variance(&values, i);
                    delta += log_density_ratio(y[i], nv, var[i]);
                    scratch.push(nv);
                }
                if !delta.is_finite() {
                    return Err(Error::NonFiniteLikelihood(it));
                }
                let u: f64 = rng.random();
                if libm::log(u) < delta {
                    var[span].copy_from_slice(&scratch);
                    took = true;
                } else {
                    values[j] = old;
                }
            }
        }
        if took {
            accepted += 1;
        }
        if it >= config.burn_in && (it - config.burn_in).is_multiple_of(config.thin) {
            states.push(DispersionFn::on_grid_unchecked(
                knots.clone(),
                values.clone(),
            ));
            iterations.push(it);
            accepted_at.push(took);
        }
    }

    let proposed = config.iters as u64;
    Ok(McmcChain {
        states,
        iterations,
        accepted_at,
        accepted,
        proposed,
        acceptance_rate: accepted as f64 / proposed as f64,
        config: *config,
        params: *params,
    })
}

/// Visit counts of a discrete Metropolis chain over net members.
#[derive(Debug, Clone, PartialEq)]
pub struct NetChain {
    pub visits: Vec<u64>,
    pub accepted: u64,
    pub proposed: u64,
}

impl NetChain {
    pub fn frequencies(&self) -> Vec<f64> {
        let total: u64 = self.visits.iter().sum();
        self.visits
            .iter()
            .map(|&v| v as f64 / total as f64)
            .collect()
    }
}

/// Metropolis chain on the net itself, targeting the exact posterior.
///
/// A move picks a knot uniformly and shifts its level by one step up or down
/// (probability 1/2 each); moves that leave the net are rejected. The
/// proposal is symmetric and the level graph is connected, so the chain's
/// visit frequencies converge to `post`.
pub fn net_chain(
    post: &DiscretePosterior<'_>,
    iters: usize,
    burn_in: usize,
    seed: SeedRecord,
) -> Result<NetChain> {
    if iters <= burn_in {
        return Err(Error::Config("iters must exceed burn_in".into()));
    }
    let prior = post.prior();
    let width = prior.knots().len();
    let top = (prior.level_count() - 1) as u16;
    let lp = post.log_post();
    let mut rng = substream(seed.base_seed, seed.stream);
    let mut current = post.argmax();
    let mut levels: Vec<u16> = prior.member_levels(current).to_vec();
    let mut visits = alloc::vec![0u64; prior.len()];
    let mut accepted = 0u64;

    for it in 0..iters {
        let j = rng.random_range(0..width);
        let up: bool = rng.random();
        let old = levels[j];
        let moved = if up {
            (old < top).then(|| old + 1)
        } else {
            old.checked_sub(1)
        };
        if let Some(new) = moved {
            let ok_left = j == 0 || levels[j - 1].abs_diff(new) <= 1;
            let ok_right = j + 1 == width || levels[j + 1].abs_diff(new) <= 1;
            if ok_left && ok_right {
                levels[j] = new;
                let cand = prior
                    .find(&levels)
                    .expect("adjacent-level path is a net member");
                let u: f64 = rng.random();
                if libm::log(u) < lp[cand] - lp[current] {
                    current = cand;
                    accepted += 1;
                } else {
                    levels[j] = old;
                }
            }
        }
        if it >= burn_in {
            visits[current] += 1;
        }
    }
    Ok(NetChain {
        visits,
        accepted,
        proposed: iters as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::build_net;
    use alloc::vec;

    fn params() -> ClassParams {
        ClassParams::new(0.5, 1.5, 1.0).unwrap()
    }

    #[test]
    fn two_atom_posterior_odds_are_the_likelihood_ratio() {
        let p = params();
        let net = build_net(&p, 2.0).unwrap();
        let obs = Observations::from_values(vec![0.0, 0.4, -0.1, 0.7], None).unwrap();
        let post = net_posterior(&net, &obs).unwrap();
        let lr =
            crate::likelihood::log_likelihood_ratio(&net.members()[0], &net.members()[3], &obs)
                .unwrap();
        assert!((post.log_post()[0] - post.log_post()[3] - lr).abs() < 1e-12);
        assert!(log_sum_exp(post.log_post()).abs() < 1e-12);
    }

    #[test]
    fn zero_prior_weight_stays_zero() {
        let net = build_net(&params(), 2.0).unwrap();
        let reweighted = net
            .with_log_weights(vec![f64::NEG_INFINITY, 0.0, 0.0, 0.0])
            .unwrap();
        let post = net_posterior_from_loglik(&reweighted, &[5.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(post.log_post()[0], f64::NEG_INFINITY);
        assert_eq!(post.weights()[0], 0.0);
    }

    #[test]
    fn shifting_log_likelihoods_changes_nothing() {
        let net = build_net(&params(), 2.0).unwrap();
        let ll = [-3.0, -1.0, -2.5, -0.2];
        let shifted: Vec<f64> = ll.iter().map(|l| l + 1234.5).collect();
        let a = net_posterior_from_loglik(&net, &ll).unwrap();
        let b = net_posterior_from_loglik(&net, &shifted).unwrap();
        for (x, y) in a.log_post().iter().zip(b.log_post()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_mass_and_mean_on_two_constants() {
        let p = params();
        let net = build_net(&p, 2.0).unwrap();
        // put all weight on the two constant members
        let post =
            net_posterior_from_loglik(&net, &[0.0, f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0])
                .unwrap();
        let mean = posterior_mean(&post, &[0.0, 0.5, 1.0]).unwrap();
        assert!(mean.iter().all(|m| (m - 1.0).abs() < 1e-12));

        let s0 = DispersionFn::constant(0.5);
        let big = posterior_ball_mass(&post, &s0, 1.01).unwrap();
        assert_eq!(big.outside, 0.0);
        let small = posterior_ball_mass(&post, &s0, 0.5).unwrap();
        assert!((small.inside - 0.5).abs() < 1e-12);
        assert!((small.inside + small.outside - 1.0).abs() < 1e-12);
        let far = posterior_ball_mass(&post, &DispersionFn::constant(1.2), 1e-6).unwrap();
        assert_eq!(far.inside, 0.0);
    }

    #[test]
    fn concentrated_posterior_mean_is_the_member() {
        let net = build_net(&params(), 2.0).unwrap();
        let post = net_posterior_from_loglik(
            &net,
            &[f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY, f64::NEG_INFINITY],
        )
        .unwrap();
        let grid = [0.0, 0.25, 1.0];
        let mean = posterior_mean(&post, &grid).unwrap();
        for (m, t) in mean.iter().zip(grid) {
            assert!((m - net.members()[1].value_at(t)).abs() < 1e-15);
        }
        assert_eq!(post.argmax(), 1);
    }

    #[test]
    fn chain_config_errors() {
        let p = params();
        let obs = Observations::from_values(vec![0.0, 0.1], None).unwrap();
        let mut cfg = McmcConfig::new(100, &p, SeedRecord::new(1, 0));
        assert!(mcmc_posterior(&p, 1, &obs, &cfg).is_err());
        cfg.burn_in = 100;
        assert!(matches!(
            mcmc_posterior(&p, 3, &obs, &cfg),
            Err(Error::Config(_))
        ));
        cfg.burn_in = 10;
        cfg.thin = 0;
        assert!(mcmc_posterior(&p, 3, &obs, &cfg).is_err());
    }

    #[test]
    fn chain_bookkeeping() {
        let p = params();
        let obs = crate::simulate::sample_observations(
            &DispersionFn::linear(0.8, 1.2),
            200,
            SeedRecord::new(3, 1),
        )
        .unwrap();
        let cfg = McmcConfig::new(5000, &p, SeedRecord::new(3, 2));
        let chain = mcmc_posterior(&p, 4, &obs, &cfg).unwrap();
        assert_eq!(chain.len(), 400);
        assert_eq!(chain.iterations[0], 1000);
        assert!(chain.acceptance_rate > 0.0 && chain.acceptance_rate < 1.0);
        assert!(chain.states.iter().all(|s| s.is_member(&p)));
        assert!(chain.accepted_at.iter().filter(|a| **a).count() as u64 <= chain.accepted);
        let again = mcmc_posterior(&p, 4, &obs, &cfg).unwrap();
        assert_eq!(again.states, chain.states);
    }

    #[test]
    fn empty_chain_is_an_error() {
        let chain = McmcChain {
            states: vec![],
            iterations: vec![],
            accepted_at: vec![],
            accepted: 0,
            proposed: 0,
            acceptance_rate: 0.0,
            config: McmcConfig::new(10, &params(), SeedRecord::new(0, 0)),
            params: params(),
        };
        let s0 = DispersionFn::constant(1.0);
        assert_eq!(
            posterior_ball_mass(&chain, &s0, 1.0),
            Err(Error::EmptyChain)
        );
        assert_eq!(posterior_mean(&chain, &[0.5]), Err(Error::EmptyChain));
    }
}
