//! Parallel drivers for the experiment suites.
//!
//! Work items are independent and seeded by their position, and results are
//! collected in item order, so output does not depend on the worker count.

use std::sync::atomic::{AtomicUsize, Ordering};

use disperse_core::experiments::lemmas::{MARTINGALE_GROUP, TAIL_GROUP};
use disperse_core::experiments::{
    default_eps_const, eps_tilde, fit_kl_offset, kl_curvature_constant, run_replicate, summarize,
    verify_kl_bound, verify_martingale_sup, verify_ratio_tail, verify_riemann_identity,
    ExperimentConfig, ExperimentResult, KlBoundReport, MartingaleSupSummary, RiemannCheck,
    TailSummary,
};
use disperse_core::prior::build_net;
use disperse_core::rng::stream_id;
use disperse_core::{ClassParams, DispersionFn, SeedRecord};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::LemmaConfig;
use crate::error::{HarnessError, Result};
use crate::io::ResultRow;

/// Largest allowed ratio between consecutive `residual * n` values.
pub const RIEMANN_MAX_RATIO: f64 = 1.5;
/// Largest allowed max/min spread of the martingale ratio across `n`.
pub const MARTINGALE_MAX_SPREAD: f64 = 5.0;

pub fn thread_pool(workers: Option<usize>) -> Result<ThreadPool> {
    let workers =
        workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    if workers == 0 {
        return Err(HarnessError::Config("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))
}

/// Runs every `(n, replicate)` pair of the contraction benchmark on `pool`.
pub fn run_contraction(
    cfg: &ExperimentConfig,
    pool: &ThreadPool,
    progress: bool,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.n_grid.len())
        .flat_map(|ni| (0..cfg.replicates).map(move |r| (ni, r)))
        .collect();
    let done = AtomicUsize::new(0);
    let rows = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(ni, r)| {
                let row = run_replicate(cfg, ni, r);
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                if progress {
                    eprint!("\rreplicates {k}/{}", tasks.len());
                }
                row
            })
            .collect::<disperse_core::Result<Vec<_>>>()
    })?;
    if progress {
        eprintln!();
    }
    Ok(summarize(cfg, rows)?)
}

pub fn contraction_rows(result: &ExperimentResult) -> Vec<ResultRow> {
    let mut out = Vec::new();
    for row in &result.rows {
        let base = |stat: String, value: f64, stderr: Option<f64>| ResultRow {
            experiment: "contraction",
            n: row.n,
            replicate: row.replicate,
            stat_name: stat,
            value,
            stderr,
            seed: Some(row.seed),
        };
        out.push(base("eps_tilde".into(), row.eps_tilde, None));
        out.push(base("median_l2".into(), row.median_l2, None));
        for &(m, mass, se) in &row.outside {
            out.push(base(format!("outside_mass_m{m}"), mass, Some(se)));
        }
        if let Some(a) = row.acceptance_rate {
            out.push(base("acceptance_rate".into(), a, None));
        }
        out.push(base("support_size".into(), row.support_size as f64, None));
    }
    out
}

/// Everything the lemma suite measured.
#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub eps_const: f64,
    pub riemann: Vec<RiemannCheck>,
    pub riemann_max_ratio: f64,
    pub c_tilde0: f64,
    pub kl_offset: f64,
    pub kl: Vec<(usize, f64, KlBoundReport)>,
    pub martingale: Vec<MartingaleSupSummary>,
    pub martingale_spread: f64,
    pub tail: Vec<TailSummary>,
}

impl LemmaReport {
    pub fn riemann_pass(&self) -> bool {
        self.riemann_max_ratio <= RIEMANN_MAX_RATIO
    }

    pub fn kl_pass(&self) -> bool {
        self.kl.iter().all(|(_, _, r)| r.holds())
    }

    pub fn martingale_pass(&self) -> bool {
        self.martingale_spread <= MARTINGALE_MAX_SPREAD
    }

    pub fn tail_pass(&self) -> bool {
        self.tail
            .windows(2)
            .all(|w| w[1].fraction() <= w[0].fraction())
    }

    pub fn all_pass(&self) -> bool {
        self.riemann_pass() && self.kl_pass() && self.martingale_pass() && self.tail_pass()
    }
}

fn check_grid(name: &str, ns: &[usize]) -> Result<()> {
    if ns.is_empty() || ns[0] < 2 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HarnessError::Config(format!(
            "{name} must be strictly increasing with n >= 2"
        )));
    }
    Ok(())
}

pub fn run_lemma_suite(
    cfg: &LemmaConfig,
    params: &ClassParams,
    s0: &DispersionFn,
    riemann_s: &DispersionFn,
    pool: &ThreadPool,
) -> Result<LemmaReport> {
    check_grid("kl_ns", &cfg.kl_ns)?;
    check_grid("martingale_ns", &cfg.martingale_ns)?;
    check_grid("tail_ns", &cfg.tail_ns)?;
    let (lo, hi) = cfg.riemann_log2_n;
    if lo > hi || hi > 24 {
        return Err(HarnessError::Config(
            "riemann_log2_n must satisfy lo <= hi <= 24".into(),
        ));
    }
    let n_min = cfg
        .kl_calibration_n
        .min(cfg.tail_ns[0])
        .min(cfg.martingale_ns[0]);
    let c = cfg
        .eps_const
        .unwrap_or_else(|| default_eps_const(params, n_min));
    if !(c > 0.0 && c.is_finite()) {
        return Err(HarnessError::Config("eps_const must be positive".into()));
    }

    let riemann: Vec<RiemannCheck> = (lo..=hi)
        .map(|k| verify_riemann_identity(riemann_s, s0, 1usize << k, params.k_upper, params.kappa))
        .collect();
    let scaled: Vec<f64> = riemann.iter().map(|r| r.residual * r.n as f64).collect();
    let riemann_max_ratio = scaled
        .windows(2)
        .map(|w| {
            if w[0] == 0.0 {
                if w[1] == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                w[1] / w[0]
            }
        })
        .fold(0.0, f64::max);

    let c_tilde0 = kl_curvature_constant(params);
    let calib_eps = eps_tilde(cfg.kl_calibration_n, c);
    let kl_offset = fit_kl_offset(
        &build_net(params, calib_eps)?,
        s0,
        calib_eps,
        cfg.kl_calibration_n,
        c_tilde0,
    );
    let kl = pool.install(|| {
        cfg.kl_ns
            .par_iter()
            .map(|&n| {
                let e = eps_tilde(n, c);
                let net = build_net(params, e)?;
                Ok((n, e, verify_kl_bound(&net, s0, e, n, c_tilde0, kl_offset)))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mnet = build_net(params, cfg.martingale_net_eps)?;
    let martingale = pool.install(|| {
        cfg.martingale_ns
            .par_iter()
            .map(|&n| {
                let e = eps_tilde(n, c);
                verify_martingale_sup(
                    &mnet,
                    s0,
                    e,
                    n,
                    cfg.martingale_reps,
                    cfg.base_seed,
                    cfg.martingale_cap,
                )
            })
            .collect::<disperse_core::Result<Vec<_>>>()
    })?;
    let ratios = martingale.iter().map(|m| m.ratio);
    let (rmin, rmax) = ratios.fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r), b.max(r)));
    let martingale_spread = if rmin > 0.0 {
        rmax / rmin
    } else {
        f64::INFINITY
    };

    let tnet = if cfg.tail_net_eps == cfg.martingale_net_eps {
        mnet
    } else {
        build_net(params, cfg.tail_net_eps)?
    };
    let tail = pool.install(|| {
        cfg.tail_ns
            .par_iter()
            .map(|&n| {
                let e = eps_tilde(n, c);
                verify_ratio_tail(
                    &tnet,
                    s0,
                    e,
                    n,
                    cfg.tail_c1,
                    cfg.tail_reps,
                    cfg.base_seed,
                    cfg.tail_cap,
                )
            })
            .collect::<disperse_core::Result<Vec<_>>>()
    })?;

    Ok(LemmaReport {
        eps_const: c,
        riemann,
        riemann_max_ratio,
        c_tilde0,
        kl_offset,
        kl,
        martingale,
        martingale_spread,
        tail,
    })
}

pub fn lemma_rows(report: &LemmaReport, base_seed: u64) -> Vec<ResultRow> {
    let row = |experiment, n, replicate, stat: &str, value, stderr, seed| ResultRow {
        experiment,
        n,
        replicate,
        stat_name: stat.into(),
        value,
        stderr,
        seed,
    };
    let mut out = Vec::new();
    for r in &report.riemann {
        for (stat, v) in [
            ("residual", r.residual),
            ("residual_times_n", r.residual * r.n as f64),
            ("riemann_sum", r.riemann_sum),
            ("integral", r.integral),
            ("deterministic_term", r.deterministic_term),
            ("log_quadratic_gap", r.log_quadratic_gap),
            ("cubic_bound", r.cubic_bound),
            ("sup_lower_bound", r.sup_lower_bound),
        ] {
            out.push(row("riemann", r.n, 0, stat, v, None, None));
        }
    }
    for (n, e, k) in &report.kl {
        out.push(row("kl_bound", *n, 0, "eps", *e, None, None));
        out.push(row("kl_bound", *n, 0, "min_slack", k.min_slack, None, None));
        out.push(row(
            "kl_bound",
            *n,
            0,
            "evaluated",
            k.evaluated as f64,
            None,
            None,
        ));
        for (j, count, slack) in &k.per_ring {
            out.push(row(
                "kl_bound",
                *n,
                0,
                &format!("ring{j}_members"),
                *count as f64,
                None,
                None,
            ));
            out.push(row(
                "kl_bound",
                *n,
                0,
                &format!("ring{j}_min_slack"),
                *slack,
                None,
                None,
            ));
        }
    }
    for m in &report.martingale {
        for (r, v) in m.per_replicate.iter().enumerate() {
            let seed = SeedRecord::new(base_seed, stream_id(MARTINGALE_GROUP, r as u32));
            out.push(row(
                "martingale_sup",
                m.n,
                r,
                "sup_abs_mean",
                *v,
                None,
                Some(seed),
            ));
        }
        out.push(row(
            "martingale_sup",
            m.n,
            0,
            "members_used",
            m.members_used as f64,
            None,
            None,
        ));
        out.push(row("martingale_sup", m.n, 0, "p95", m.p95, None, None));
        out.push(row(
            "martingale_sup",
            m.n,
            0,
            "p95_over_eps_tilde_sq",
            m.ratio,
            None,
            None,
        ));
    }
    for t in &report.tail {
        for (r, v) in t.max_log_ratio.iter().enumerate() {
            let seed = SeedRecord::new(base_seed, stream_id(TAIL_GROUP, r as u32));
            out.push(row(
                "ratio_tail",
                t.n,
                r,
                "max_log_ratio",
                *v,
                None,
                Some(seed),
            ));
        }
        let p = t.fraction();
        let se = (p * (1.0 - p) / t.reps as f64).sqrt();
        out.push(row(
            "ratio_tail",
            t.n,
            0,
            "members_used",
            t.members_used as f64,
            None,
            None,
        ));
        out.push(row(
            "ratio_tail",
            t.n,
            0,
            "threshold",
            -t.c1 * t.n as f64 * t.eps_n * t.eps_n,
            None,
            None,
        ));
        out.push(row("ratio_tail", t.n, 0, "fraction", p, Some(se), None));
    }
    out
}
