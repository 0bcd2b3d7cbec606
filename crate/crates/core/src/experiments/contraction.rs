//! Posterior contraction benchmark.
//!
//! For each grid size `n` and replicate, observations are simulated from the
//! truth, the posterior is computed, and two statistics are recorded: the
//! posterior median of `||s - s0||_2` and the posterior mass outside the L2
//! balls of radius `m * eps_tilde(n)`. The per-`n` medians of the former are
//! fitted against `n` on a log-log scale.
//!
//! Each replicate is a pure function of the config and its `(n, replicate)`
//! position, so replicates can be farmed out in any order.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{ClassParams, DispersionFn, Metric};
use crate::posterior::{mcmc_posterior, net_posterior, outside_fraction, McmcConfig};
use crate::prior::{build_net_with_cap, DEFAULT_MEMBER_CAP};
use crate::rng::stream_id;
use crate::simulate::{sample_observations, SeedRecord};
use crate::stats::{median, weighted_median};

use super::{default_eps_const, eps_tilde, log_log_fit, SlopeFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Exact posterior over a net of resolution `eps_tilde(n)`.
    Net,
    /// Metropolis chain over the knot-value polytope.
    Mcmc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub s0: DispersionFn,
    pub params: ClassParams,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// `c` in `eps_tilde(n) = c n^(-1/3) log n`.
    pub eps_const: f64,
    /// Radii are `m * eps_tilde(n)` for each `m` here.
    pub radius_multipliers: Vec<f64>,
    pub backend: Backend,
    pub base_seed: u64,
    /// MCMC knot count is `max(3, round(knot_scale * n^(1/3)))`.
    pub knot_scale: f64,
    /// MCMC iterations are `mcmc_sweeps * knot_count`.
    pub mcmc_sweeps: usize,
    /// Proposal step; `None` uses `0.1 (K - kappa)`.
    pub mcmc_step: Option<f64>,
    pub net_cap: usize,
}

impl ExperimentConfig {
    /// Config with the documented defaults: 20 replicates, `c` from
    /// [`default_eps_const`], multipliers `{1, 2, 4, 8}`, MCMC backend.
    pub fn new(s0: DispersionFn, params: ClassParams, n_grid: Vec<usize>) -> Self {
        let n_min = n_grid.first().copied().unwrap_or(2).max(2);
        Self {
            eps_const: default_eps_const(&params, n_min),
            s0,
            params,
            n_grid,
            replicates: 20,
            radius_multipliers: alloc::vec![1.0, 2.0, 4.0, 8.0],
            backend: Backend::Mcmc,
            base_seed: 20_240_601,
            knot_scale: 1.0,
            mcmc_sweeps: 2000,
            mcmc_step: None,
            net_cap: DEFAULT_MEMBER_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid[0] < 2 {
            return Err(Error::Config("n_grid must be non-empty with n >= 2".into()));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n_grid must be strictly increasing".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if !(self.eps_const > 0.0 && self.eps_const.is_finite()) {
            return Err(Error::Config("eps_const must be positive".into()));
        }
        if self
            .radius_multipliers
            .iter()
            .any(|m| m.is_nan() || *m <= 0.0)
        {
            return Err(Error::Config("radius multipliers must be positive".into()));
        }
        if self.knot_scale.is_nan() || self.knot_scale <= 0.0 || self.mcmc_sweeps == 0 {
            return Err(Error::Config(
                "knot_scale and mcmc_sweeps must be positive".into(),
            ));
        }
        if let Some(v) = self.s0.class_violation(&self.params) {
            return Err(v.into());
        }
        Ok(())
    }

    pub fn eps_tilde(&self, n: usize) -> f64 {
        eps_tilde(n, self.eps_const)
    }

    /// Observation stream of replicate `r` at grid position `n_index`.
    pub fn obs_seed(&self, n_index: usize, r: usize) -> SeedRecord {
        SeedRecord::new(self.base_seed, stream_id(2 * n_index as u32, r as u32))
    }

    /// Sampler stream of replicate `r` at grid position `n_index`.
    pub fn sampler_seed(&self, n_index: usize, r: usize) -> SeedRecord {
        SeedRecord::new(self.base_seed, stream_id(2 * n_index as u32 + 1, r as u32))
    }
}

/// Knot count used by the MCMC backend at grid size `n`.
pub fn knot_count_for(n: usize, knot_scale: f64) -> usize {
    let k = libm::round(knot_scale * libm::cbrt(n as f64)) as usize;
    k.max(3)
}

/// Statistics of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    pub n: usize,
    pub replicate: usize,
    pub seed: SeedRecord,
    pub eps_tilde: f64,
    pub median_l2: f64,
    /// `(multiplier, outside mass, standard error)`; the error is the
    /// batch-means estimate for MCMC and 0 for the exact backend.
    pub outside: Vec<(f64, f64, f64)>,
    /// MCMC acceptance rate, or `None` for the exact backend.
    pub acceptance_rate: Option<f64>,
    /// Knot count (MCMC) or net size (exact backend).
    pub support_size: usize,
}

/// Aggregates at one grid size.
#[derive(Debug, Clone, PartialEq)]
pub struct NSummary {
    pub n: usize,
    pub eps_tilde: f64,
    /// Median over replicates of the per-replicate posterior median error.
    pub median_l2: f64,
    /// Mean over replicates of the outside mass, per multiplier.
    pub mean_outside: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ReplicateRow>,
    pub per_n: Vec<NSummary>,
    /// Fit of `log(median_l2)` on `log(n)`; `None` when it is degenerate
    /// (fewer than three grid sizes or a zero median).
    pub slope_fit: Option<SlopeFit>,
}

/// Runs replicate `r` at grid position `n_index`.
pub fn run_replicate(cfg: &ExperimentConfig, n_index: usize, r: usize) -> Result<ReplicateRow> {
    let n = cfg.n_grid[n_index];
    let eps = cfg.eps_tilde(n);
    let seed = cfg.obs_seed(n_index, r);
    let obs = sample_observations(&cfg.s0, n, seed)?;

    let (median_l2, outside, acceptance_rate, support_size) = match cfg.backend {
        Backend::Mcmc => {
            let knots = knot_count_for(n, cfg.knot_scale);
            let mut mc = McmcConfig::new(
                cfg.mcmc_sweeps * knots,
                &cfg.params,
                cfg.sampler_seed(n_index, r),
            );
            if let Some(step) = cfg.mcmc_step {
                mc.step = step;
            }
            let chain = mcmc_posterior(&cfg.params, knots, &obs, &mc)?;
            let errors = chain.l2_errors(&cfg.s0);
            let outside = cfg
                .radius_multipliers
                .iter()
                .map(|&m| outside_fraction(&errors, m * eps).map(|(o, se)| (m, o, se)))
                .collect::<Result<Vec<_>>>()?;
            (median(&errors), outside, Some(chain.acceptance_rate), knots)
        }
        Backend::Net => {
            let net = build_net_with_cap(&cfg.params, eps, cfg.net_cap)?;
            let post = net_posterior(&net, &obs)?;
            let weights = post.weights();
            let errors: Vec<f64> = net
                .members()
                .iter()
                .map(|m| m.distance(&cfg.s0, Metric::L2))
                .collect();
            let outside = cfg
                .radius_multipliers
                .iter()
                .map(|&m| {
                    let inside: f64 = errors
                        .iter()
                        .zip(&weights)
                        .filter(|(d, _)| **d < m * eps)
                        .map(|(_, w)| w)
                        .sum();
                    (m, 1.0 - inside.clamp(0.0, 1.0), 0.0)
                })
                .collect();
            (weighted_median(&errors, &weights), outside, None, net.len())
        }
    };

    Ok(ReplicateRow {
        n,
        replicate: r,
        seed,
        eps_tilde: eps,
        median_l2,
        outside,
        acceptance_rate,
        support_size,
    })
}

/// Per-`n` aggregation and slope fit. Rows may arrive in any order; they
/// are sorted by `(n, replicate)` first.
pub fn summarize(cfg: &ExperimentConfig, mut rows: Vec<ReplicateRow>) -> Result<ExperimentResult> {
    rows.sort_by_key(|r| (r.n, r.replicate));
    let mut per_n = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let group: Vec<&ReplicateRow> = rows.iter().filter(|r| r.n == n).collect();
        if group.is_empty() {
            return Err(Error::Config(alloc::format!(
                "no replicate rows for n = {n}"
            )));
        }
        let medians: Vec<f64> = group.iter().map(|r| r.median_l2).collect();
        let mean_outside = (0..cfg.radius_multipliers.len())
            .map(|k| group.iter().map(|r| r.outside[k].1).sum::<f64>() / group.len() as f64)
            .collect();
        per_n.push(NSummary {
            n,
            eps_tilde: cfg.eps_tilde(n),
            median_l2: median(&medians),
            mean_outside,
        });
    }
    let ns: Vec<usize> = per_n.iter().map(|s| s.n).collect();
    let meds: Vec<f64> = per_n.iter().map(|s| s.median_l2).collect();
    let slope_fit = log_log_fit(&ns, &meds).ok();
    Ok(ExperimentResult {
        rows,
        per_n,
        slope_fit,
    })
}

/// Sequential benchmark; the harness runs the same replicates in parallel.
pub fn contraction_benchmark(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len() * cfg.replicates);
    for n_index in 0..cfg.n_grid.len() {
        for r in 0..cfg.replicates {
            rows.push(run_replicate(cfg, n_index, r)?);
        }
    }
    summarize(cfg, rows)
}
