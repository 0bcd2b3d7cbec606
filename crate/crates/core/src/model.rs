//! Piecewise-linear dispersion coefficients and the class they live in.
//!
//! A [`DispersionFn`] is a continuous piecewise-linear function on `[0, 1]`.
//! Membership in the class is the closed range constraint
//! `kappa <= s <= k_upper` plus a Lipschitz bound `m_lip` on every segment.
//! Everything here is exact: integrals of `s^2` and both distances are
//! evaluated in closed form on the knot grid.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Relative slack on the slope bound. Grid-built functions whose slope is
/// exactly `m_lip` come out a few ulps above it after the division.
pub const SLOPE_RTOL: f64 = 1e-9;

/// The constants `(kappa, k_upper, m_lip)` defining the admissible class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassParams {
    pub kappa: f64,
    pub k_upper: f64,
    pub m_lip: f64,
}

impl ClassParams {
    pub fn new(kappa: f64, k_upper: f64, m_lip: f64) -> Result<Self> {
        if !(kappa.is_finite() && k_upper.is_finite() && m_lip.is_finite()) {
            return Err(Error::InvalidParams("class constants must be finite"));
        }
        if !(kappa > 0.0 && kappa < k_upper) {
            return Err(Error::InvalidParams("need 0 < kappa < k_upper"));
        }
        if m_lip <= 0.0 {
            return Err(Error::InvalidParams("need m_lip > 0"));
        }
        Ok(Self {
            kappa,
            k_upper,
            m_lip,
        })
    }

    /// `k_upper - kappa`, which bounds both distances between class members.
    pub fn range_width(&self) -> f64 {
        self.k_upper - self.kappa
    }

    /// Midpoint `(kappa + k_upper) / 2` of the admissible range.
    pub fn mid_level(&self) -> f64 {
        0.5 * (self.kappa + self.k_upper)
    }

    /// Attainable range `[kappa^2/K^2 - 1, K^2/kappa^2 - 1]` of the variance
    /// ratio statistic between two class members.
    pub fn f_range(&self) -> (f64, f64) {
        let r = self.kappa / self.k_upper;
        (r * r - 1.0, 1.0 / (r * r) - 1.0)
    }
}

/// First reason a function fails to be a class member.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Range {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    Slope {
        segment: usize,
        slope: f64,
        bound: f64,
    },
    Grid(&'static str),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Range {
                index,
                value,
                lower,
                upper,
            } => {
                write!(
                    f,
                    "value {value} at knot {index} outside [{lower}, {upper}]"
                )
            }
            Violation::Slope {
                segment,
                slope,
                bound,
            } => {
                write!(f, "slope {slope} on segment {segment} exceeds {bound}")
            }
            Violation::Grid(why) => write!(f, "malformed knot grid: {why}"),
        }
    }
}

/// Norm used for distances between dispersion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    L2,
    Sup,
}

/// Continuous piecewise-linear function on `[0, 1]`.
///
/// The knot vector is reference counted so that large families of functions
/// on a common grid (nets, MCMC draws) share it.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionFn {
    knots: Arc<[f64]>,
    values: Vec<f64>,
}

impl DispersionFn {
    /// Builds a function after checking the knot grid only; class
    /// constraints are not enforced. See [`make_piecewise_linear`].
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&knots, &values)?;
        Ok(Self {
            knots: knots.into(),
            values,
        })
    }

    /// Builds a function on a shared grid. Same checks as [`DispersionFn::new`].
    pub fn on_grid(knots: Arc<[f64]>, values: Vec<f64>) -> Result<Self> {
        check_grid(&knots, &values)?;
        Ok(Self { knots, values })
    }

    /// Caller guarantees the grid is well formed and `values` matches it.
    pub(crate) fn on_grid_unchecked(knots: Arc<[f64]>, values: Vec<f64>) -> Self {
        debug_assert!(check_grid(&knots, &values).is_ok());
        Self { knots, values }
    }

    pub fn constant(value: f64) -> Self {
        Self::linear(value, value)
    }

    /// `t -> v0 + (v1 - v0) t`.
    pub fn linear(v0: f64, v1: f64) -> Self {
        Self {
            knots: Arc::from([0.0, 1.0].as_slice()),
            values: alloc::vec![v0, v1],
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn shared_knots(&self) -> &Arc<[f64]> {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    /// Linear interpolation between the bracketing knots.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(t));
        }
        Ok(self.value_at(t))
    }

    /// Like [`eval`](Self::eval) for `t` already known to lie in `[0, 1]`.
    pub(crate) fn value_at(&self, t: f64) -> f64 {
        self.value_in_segment(self.segment_of(t), t)
    }

    fn value_in_segment(&self, j: usize, t: f64) -> f64 {
        let (t0, t1) = (self.knots[j], self.knots[j + 1]);
        let (v0, v1) = (self.values[j], self.values[j + 1]);
        if t == t0 {
            return v0;
        }
        if t == t1 {
            return v1;
        }
        v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
    }

    /// Index `j` of the segment `[knots[j], knots[j+1])` containing `t`; the
    /// last segment also owns `t = 1`.
    fn segment_of(&self, t: f64) -> usize {
        let j = self.knots.partition_point(|&k| k <= t);
        j.saturating_sub(1).min(self.knots.len() - 2)
    }

    /// Exact `int_a^b s(u)^2 du`.
    pub fn integral_sq(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain(a));
        }
        if !(a..=1.0).contains(&b) {
            return Err(Error::Domain(b));
        }
        Ok(self.integral_sq_unchecked(a, b))
    }

    pub(crate) fn integral_sq_unchecked(&self, a: f64, b: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        let mut total = 0.0;
        let mut j = self.segment_of(a);
        let last = self.knots.len() - 1;
        while j < last && self.knots[j] < b {
            let lo = a.max(self.knots[j]);
            let hi = b.min(self.knots[j + 1]);
            if hi > lo {
                let (sa, sb) = (self.value_in_segment(j, lo), self.value_in_segment(j, hi));
                total += sq_integral(hi - lo, sa, sb);
            }
            j += 1;
        }
        total
    }

    /// Distance under `metric`, exact on the merged knot grid.
    pub fn distance(&self, other: &DispersionFn, metric: Metric) -> f64 {
        let grid = merge_grids(&self.knots, &other.knots);
        let diffs: Vec<f64> = grid
            .iter()
            .map(|&t| self.value_at(t) - other.value_at(t))
            .collect();
        match metric {
            Metric::Sup => diffs.iter().fold(0.0_f64, |m, d| m.max(d.abs())),
            Metric::L2 => {
                let sq: f64 = grid
                    .windows(2)
                    .zip(diffs.windows(2))
                    .map(|(t, d)| sq_integral(t[1] - t[0], d[0], d[1]))
                    .sum();
                libm::sqrt(sq)
            }
        }
    }

    /// First violated class constraint, if any.
    pub fn class_violation(&self, params: &ClassParams) -> Option<Violation> {
        class_violation(&self.knots, &self.values, params)
    }

    pub fn is_member(&self, params: &ClassParams) -> bool {
        self.class_violation(params).is_none()
    }
}

/// Validated constructor: the grid must be well formed and the function a
/// member of the class described by `params`.
pub fn make_piecewise_linear(
    knots: Vec<f64>,
    values: Vec<f64>,
    params: &ClassParams,
) -> Result<DispersionFn> {
    let s = DispersionFn::new(knots, values)?;
    match s.class_violation(params) {
        Some(v) => Err(v.into()),
        None => Ok(s),
    }
}

/// `int` of the square of the linear function with end values `a`, `b` over
/// an interval of length `len`.
#[inline]
pub(crate) fn sq_integral(len: f64, a: f64, b: f64) -> f64 {
    len * (a * a + a * b + b * b) / 3.0
}

fn check_grid(knots: &[f64], values: &[f64]) -> Result<(), Violation> {
    if knots.len() < 2 {
        return Err(Violation::Grid("need at least two knots"));
    }
    if knots.len() != values.len() {
        return Err(Violation::Grid("knots and values differ in length"));
    }
    if knots[0] != 0.0 || knots[knots.len() - 1] != 1.0 {
        return Err(Violation::Grid("knots must start at 0 and end at 1"));
    }
    if knots.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(core::cmp::Ordering::Greater)) {
        return Err(Violation::Grid("knots must be strictly increasing"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Violation::Grid("values must be finite"));
    }
    Ok(())
}

fn class_violation(knots: &[f64], values: &[f64], params: &ClassParams) -> Option<Violation> {
    if let Err(v) = check_grid(knots, values) {
        return Some(v);
    }
    if let Some((index, &value)) = values
        .iter()
        .enumerate()
        .find(|(_, &v)| v < params.kappa || v > params.k_upper)
    {
        return Some(Violation::Range {
            index,
            value,
            lower: params.kappa,
            upper: params.k_upper,
        });
    }
    let bound = params.m_lip;
    for (segment, (t, v)) in knots.windows(2).zip(values.windows(2)).enumerate() {
        let slope = (v[1] - v[0]).abs() / (t[1] - t[0]);
        if slope > bound * (1.0 + SLOPE_RTOL) {
            return Some(Violation::Slope {
                segment,
                slope,
                bound,
            });
        }
    }
    None
}

/// Sorted union of two knot grids with exact duplicates removed.
pub(crate) fn merge_grids(a: &[f64], b: &[f64]) -> Vec<f64> {
    if core::ptr::eq(a, b) {
        return a.to_vec();
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(&x), Some(&y)) if y < x => {
                j += 1;
                y
            }
            (Some(&x), Some(_)) => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}
