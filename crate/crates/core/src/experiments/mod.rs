//! The contraction-rate benchmark and numerical checks of the bounds behind
//! it.
//!
//! The reference rate is `eps_tilde(n) = c n^(-1/3) log n` (natural log).

pub mod contraction;
pub mod lemmas;
pub mod sigma0;

use crate::error::{Error, Result};
use crate::model::ClassParams;

pub use contraction::{
    contraction_benchmark, knot_count_for, run_replicate, summarize, Backend, ExperimentConfig,
    ExperimentResult, NSummary, ReplicateRow,
};
pub use lemmas::{
    fit_kl_offset, kl_curvature_constant, verify_kl_bound, verify_martingale_sup,
    verify_ratio_tail, verify_riemann_identity, KlBoundReport, MartingaleSupSummary, RiemannCheck,
    TailSummary,
};
pub use sigma0::{sigma0_constant, sigma0_quadrature};

/// `n^(-1/3) log n`.
pub fn rate(n: usize) -> f64 {
    let n = n as f64;
    libm::pow(n, -1.0 / 3.0) * libm::log(n)
}

/// `c n^(-1/3) log n`.
pub fn eps_tilde(n: usize, eps_const: f64) -> f64 {
    eps_const * rate(n)
}

/// Largest `c` with `eps_tilde(n_min) <= (K - kappa) / 2`.
pub fn default_eps_const(params: &ClassParams, n_min: usize) -> f64 {
    0.5 * params.range_width() / rate(n_min)
}

/// Ordinary least-squares line through `(x, y)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub residual: f64,
}

pub fn slope_fit(pairs: &[(f64, f64)]) -> Result<SlopeFit> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateDesign);
    }
    for (k, (x, _)) in pairs.iter().enumerate() {
        if !x.is_finite() || pairs[..k].iter().any(|(x2, _)| x2 == x) {
            return Err(Error::DegenerateDesign);
        }
    }
    let m = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pairs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pairs
        .iter()
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
    })
}

/// Log-log fit of `values` against `ns`.
pub fn log_log_fit(ns: &[usize], values: &[f64]) -> Result<SlopeFit> {
    let pairs: alloc::vec::Vec<(f64, f64)> = ns
        .iter()
        .zip(values)
        .map(|(&n, &v)| (libm::log(n as f64), libm::log(v)))
        .collect();
    if pairs.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::DegenerateDesign);
    }
    slope_fit(&pairs)
}
