//! Finite sup-norm nets over the Lipschitz class, used as sieve priors.
//!
//! A net of resolution `eps` lives on the uniform knot grid with
//! `ceil(2 M / eps)` segments, so the spacing `h` is at most `eps / (2M)`.
//! Knot values range over the levels `kappa + k * M h` inside
//! `[kappa, k_upper]`, and adjacent knots differ by at most one level, which
//! is exactly the slope bound. Rounding any class member down to the level
//! grid at the knots gives a net member within `3 eps / 4` in sup norm.
//!
//! Members are enumerated in lexicographic order of their level sequences.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{ClassParams, DispersionFn, Metric};
use crate::stats::log_sum_exp;

/// Default cap on the number of enumerated members.
pub const DEFAULT_MEMBER_CAP: usize = 1_000_000;

/// Uniform prior on a finite net of class members.
#[derive(Debug, Clone)]
pub struct NetPrior {
    members: Vec<DispersionFn>,
    levels: Vec<u16>,
    log_weights: Vec<f64>,
    resolution: f64,
    params: ClassParams,
    knots: Arc<[f64]>,
    level_step: f64,
    level_count: usize,
}

impl NetPrior {
    pub fn members(&self) -> &[DispersionFn] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn params(&self) -> &ClassParams {
        &self.params
    }

    pub fn knots(&self) -> &Arc<[f64]> {
        &self.knots
    }

    /// Spacing between adjacent value levels.
    pub fn level_step(&self) -> f64 {
        self.level_step
    }

    pub fn level_count(&self) -> usize {
        self.level_count
    }

    /// Level indices of member `k`, one per knot.
    pub fn member_levels(&self, k: usize) -> &[u16] {
        let width = self.knots.len();
        &self.levels[k * width..(k + 1) * width]
    }

    /// Index of the member with the given level sequence, if it is in the net.
    pub fn find(&self, levels: &[u16]) -> Option<usize> {
        let width = self.knots.len();
        let (mut lo, mut hi) = (0usize, self.members.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.levels[mid * width..(mid + 1) * width].cmp(levels) {
                core::cmp::Ordering::Less => lo = mid + 1,
                core::cmp::Ordering::Greater => hi = mid,
                core::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Same net with different (unnormalised) log weights; they are
    /// normalised by log-sum-exp.
    pub fn with_log_weights(&self, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() != self.members.len() {
            return Err(Error::Config("one log weight per member required".into()));
        }
        let z = log_sum_exp(&log_weights);
        if !z.is_finite() {
            return Err(Error::Config(
                "prior weights must have finite positive total".into(),
            ));
        }
        let mut out = self.clone();
        out.log_weights = log_weights.into_iter().map(|w| w - z).collect();
        Ok(out)
    }
}

/// Grid geometry of the net at resolution `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetGeometry {
    pub segments: usize,
    pub level_step: f64,
    pub level_count: usize,
}

impl NetGeometry {
    pub fn new(params: &ClassParams, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::BadEps(eps));
        }
        let ratio = 2.0 * params.m_lip / eps;
        if ratio > 1e7 {
            return Err(Error::NetTooLarge {
                count: u128::MAX,
                cap: DEFAULT_MEMBER_CAP,
            });
        }
        let segments = (libm::ceil(ratio - 1e-12) as usize).max(1);
        let h = 1.0 / segments as f64;
        let level_step = params.m_lip * h;
        let level_count = libm::floor(params.range_width() / level_step + 1e-9) as usize + 1;
        Ok(Self {
            segments,
            level_step,
            level_count,
        })
    }

    /// Number of level paths, saturating once it passes `stop_above`.
    pub fn member_count(&self, stop_above: u128) -> u128 {
        let l = self.level_count;
        let mut ways = alloc::vec![1u128; l];
        let mut next = alloc::vec![0u128; l];
        for _ in 0..self.segments {
            for (k, slot) in next.iter_mut().enumerate() {
                let lo = k.saturating_sub(1);
                let hi = (k + 1).min(l - 1);
                *slot = ways[lo..=hi]
                    .iter()
                    .fold(0u128, |a, &b| a.saturating_add(b));
            }
            core::mem::swap(&mut ways, &mut next);
            let total = ways.iter().fold(0u128, |a, &b| a.saturating_add(b));
            if total > stop_above {
                return total;
            }
        }
        ways.iter().fold(0u128, |a, &b| a.saturating_add(b))
    }
}

pub fn build_net(params: &ClassParams, eps: f64) -> Result<NetPrior> {
    build_net_with_cap(params, eps, DEFAULT_MEMBER_CAP)
}

pub fn build_net_with_cap(params: &ClassParams, eps: f64, cap: usize) -> Result<NetPrior> {
    let geo = NetGeometry::new(params, eps)?;
    if geo.level_count > u16::MAX as usize {
        return Err(Error::NetTooLarge {
            count: u128::MAX,
            cap,
        });
    }
    let count = geo.member_count(cap as u128);
    if count > cap as u128 {
        return Err(Error::NetTooLarge { count, cap });
    }
    let count = count as usize;
    let width = geo.segments + 1;
    let knots: Arc<[f64]> = (0..width)
        .map(|j| j as f64 / geo.segments as f64)
        .collect::<Vec<_>>()
        .into();
    let level_value = |k: u16| (params.kappa + f64::from(k) * geo.level_step).min(params.k_upper);

    let mut levels = Vec::with_capacity(count * width);
    let mut members = Vec::with_capacity(count);
    let top = (geo.level_count - 1) as u16;
    let mut path = alloc::vec![0u16; width];
    // Odometer over level paths with |path[j+1] - path[j]| <= 1, lexicographic.
    'outer: loop {
        levels.extend_from_slice(&path);
        members.push(DispersionFn::on_grid_unchecked(
            knots.clone(),
            path.iter().map(|&k| level_value(k)).collect(),
        ));
        let mut j = width;
        loop {
            if j == 0 {
                break 'outer;
            }
            j -= 1;
            let cap_here = if j == 0 {
                top
            } else {
                (path[j - 1] + 1).min(top)
            };
            if path[j] < cap_here {
                path[j] += 1;
                for t in j + 1..width {
                    path[t] = path[t - 1].saturating_sub(1);
                }
                break;
            }
        }
    }
    debug_assert_eq!(members.len(), count);

    let lw = -libm::log(count as f64);
    Ok(NetPrior {
        log_weights: alloc::vec![lw; count],
        members,
        levels,
        resolution: eps,
        params: *params,
        knots,
        level_step: geo.level_step,
        level_count: geo.level_count,
    })
}

/// `log Pi(d(s, s0) < eps)`; `-inf` when no member is that close.
pub fn small_ball_mass(prior: &NetPrior, s0: &DispersionFn, eps: f64, metric: Metric) -> f64 {
    let inside: Vec<f64> = prior
        .members
        .iter()
        .zip(&prior.log_weights)
        .filter(|(m, _)| m.distance(s0, metric) < eps)
        .map(|(_, &w)| w)
        .collect();
    log_sum_exp(&inside)
}

/// Where a member sits relative to the L2 ball of radius `eps` around `s0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Shell {
    /// `||s - s0||_2^2 < eps^2`
    Inside,
    /// `2^j eps^2 <= ||s - s0||_2^2 < 2^(j+1) eps^2`
    Ring(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellIndex {
    pub m_eps: u32,
    pub assignment: Vec<Shell>,
    pub eps: f64,
}

impl ShellIndex {
    /// Member indices in ring `j`.
    pub fn ring_members(&self, j: u32) -> Vec<usize> {
        self.members_where(Shell::Ring(j))
    }

    pub fn inside_members(&self) -> Vec<usize> {
        self.members_where(Shell::Inside)
    }

    fn members_where(&self, which: Shell) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == which)
            .map(|(k, _)| k)
            .collect()
    }

    /// Total prior weight per group: index 0 is the inside of the ball,
    /// index `j + 1` is ring `j`.
    pub fn weights(&self, prior: &NetPrior) -> Vec<f64> {
        let mut w = alloc::vec![0.0; self.m_eps as usize + 2];
        for (shell, lw) in self.assignment.iter().zip(prior.log_weights()) {
            let slot = match shell {
                Shell::Inside => 0,
                Shell::Ring(j) => *j as usize + 1,
            };
            w[slot] += libm::exp(*lw);
        }
        w
    }
}

/// Smallest positive `M` with `2^M eps^2 >= 4 K^2`.
pub fn shell_count(k_upper: f64, eps: f64) -> u32 {
    let target = 4.0 * k_upper * k_upper;
    let mut m = 1u32;
    while libm::ldexp(eps * eps, m as i32) < target {
        m += 1;
    }
    m
}

/// Ring index of a squared distance, with closed lower edges.
pub fn ring_of(dist_sq: f64, eps: f64, m_eps: u32) -> Shell {
    let e2 = eps * eps;
    if dist_sq < e2 {
        return Shell::Inside;
    }
    let mut j = 0u32;
    while j < m_eps && dist_sq >= libm::ldexp(e2, j as i32 + 1) {
        j += 1;
    }
    Shell::Ring(j)
}

pub fn shell_partition(prior: &NetPrior, s0: &DispersionFn, eps: f64) -> ShellIndex {
    let m_eps = shell_count(prior.params.k_upper, eps);
    let assignment = prior
        .members
        .iter()
        .map(|m| {
            let d = m.distance(s0, Metric::L2);
            ring_of(d * d, eps, m_eps)
        })
        .collect();
    ShellIndex {
        m_eps,
        assignment,
        eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ClassParams {
        ClassParams::new(0.5, 1.5, 1.0).unwrap()
    }

    #[test]
    fn coarse_net_has_four_members() {
        let net = build_net(&small(), 2.0).unwrap();
        assert_eq!(net.len(), 4);
        let vals: Vec<&[f64]> = net.members().iter().map(|m| m.values()).collect();
        assert_eq!(
            vals,
            [&[0.5, 0.5][..], &[0.5, 1.5], &[1.5, 0.5], &[1.5, 1.5]]
        );
        for lw in net.log_weights() {
            assert!((lw + libm::log(4.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn halving_eps_refines() {
        let coarse = build_net(&small(), 2.0).unwrap();
        let fine = build_net(&small(), 1.0).unwrap();
        assert_eq!(fine.len(), 17);
        assert!(fine.len() > coarse.len());
    }

    #[test]
    fn members_are_valid_and_distinct() {
        let p = ClassParams::new(0.5, 2.0, 1.0).unwrap();
        let net = build_net(&p, 0.6).unwrap();
        assert!(net.members().iter().all(|m| m.is_member(&p)));
        assert_eq!(
            u128::try_from(net.len()).unwrap(),
            NetGeometry::new(&p, 0.6).unwrap().member_count(u128::MAX)
        );
        for k in 1..net.len() {
            assert!(net.member_levels(k - 1) < net.member_levels(k));
        }
        for k in [0, net.len() / 3, net.len() - 1] {
            assert_eq!(net.find(net.member_levels(k)), Some(k));
        }
    }

    #[test]
    fn bad_inputs() {
        assert_eq!(build_net(&small(), 0.0).unwrap_err(), Error::BadEps(0.0));
        assert!(matches!(build_net(&small(), -1.0), Err(Error::BadEps(_))));
        assert!(matches!(
            build_net_with_cap(&small(), 0.1, 1000),
            Err(Error::NetTooLarge { .. })
        ));
        assert!(matches!(
            build_net(&small(), 1e-9),
            Err(Error::NetTooLarge { .. })
        ));
    }

    #[test]
    fn small_ball_examples() {
        let net = build_net(&small(), 2.0).unwrap();
        let s0 = DispersionFn::constant(0.5);
        let m = small_ball_mass(&net, &s0, 0.5, Metric::Sup);
        assert!((m + libm::log(4.0)).abs() < 1e-15);
        assert_eq!(small_ball_mass(&net, &s0, 1.01, Metric::Sup), 0.0);
        assert_eq!(
            small_ball_mass(&net, &DispersionFn::constant(5.0), 0.5, Metric::Sup),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn shell_count_example() {
        assert_eq!(shell_count(2.0, 1.0), 4);
        assert!(libm::ldexp(1.0, 4) <= 8.0 * 4.0);
        assert_eq!(shell_count(0.1, 10.0), 1);
    }

    #[test]
    fn ring_edges_are_closed_below() {
        assert_eq!(ring_of(1.0, 1.0, 4), Shell::Ring(0));
        assert_eq!(ring_of(0.999, 1.0, 4), Shell::Inside);
        assert_eq!(ring_of(2.0, 1.0, 4), Shell::Ring(1));
        assert_eq!(ring_of(3.99, 1.0, 4), Shell::Ring(1));
    }

    #[test]
    fn shells_cover_the_net() {
        let p = ClassParams::new(0.5, 2.0, 1.0).unwrap();
        let net = build_net(&p, 0.5).unwrap();
        let s0 = net.members()[net.len() / 2].clone();
        let idx = shell_partition(&net, &s0, 0.3);
        assert_eq!(idx.assignment[net.len() / 2], Shell::Inside);
        assert!((idx.weights(&net).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
