//! Precomputed overlap between a fixed knot grid and the observation grid.
//!
//! For functions that share one knot vector (net members, MCMC states) the
//! increment variances `int_{(i-1)/n}^{i/n} s^2` are quadratic forms in the
//! knot values. [`GridDesign`] stores the overlap pieces once so that the
//! variances, and the set of increments touched by a single knot, come
//! without any search.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::Range;

use crate::simulate::grid_time;

#[derive(Debug, Clone, Copy)]
struct Piece {
    segment: usize,
    len_third: f64,
    lam_lo: f64,
    lam_hi: f64,
}

#[derive(Debug, Clone)]
pub struct GridDesign {
    knots: Arc<[f64]>,
    n: usize,
    pieces: Vec<Piece>,
    piece_start: Vec<usize>,
    knot_span: Vec<Range<usize>>,
}

impl GridDesign {
    /// `knots` must be a valid grid (starts at 0, ends at 1, increasing).
    pub fn new(knots: Arc<[f64]>, n: usize) -> Self {
        let segs = knots.len() - 1;
        let mut pieces = Vec::with_capacity(n + segs);
        let mut piece_start = Vec::with_capacity(n + 1);
        let mut seg_first = alloc::vec![usize::MAX; segs];
        let mut seg_last = alloc::vec![0usize; segs];
        let mut j = 0usize;
        for i in 0..n {
            piece_start.push(pieces.len());
            let (a, b) = (grid_time(i, n), grid_time(i + 1, n));
            while j + 1 < segs && knots[j + 1] <= a {
                j += 1;
            }
            let mut k = j;
            while k < segs && knots[k] < b {
                let (t0, t1) = (knots[k], knots[k + 1]);
                let lo = a.max(t0);
                let hi = b.min(t1);
                if hi > lo {
                    let width = t1 - t0;
                    pieces.push(Piece {
                        segment: k,
                        len_third: (hi - lo) / 3.0,
                        lam_lo: (lo - t0) / width,
                        lam_hi: if hi == t1 { 1.0 } else { (hi - t0) / width },
                    });
                    seg_first[k] = seg_first[k].min(i);
                    seg_last[k] = seg_last[k].max(i);
                }
                k += 1;
            }
        }
        piece_start.push(pieces.len());

        let knot_span = (0..=segs)
            .map(|knot| {
                let left = knot.saturating_sub(1);
                let right = knot.min(segs - 1);
                let lo = seg_first[left].min(seg_first[right]);
                let hi = seg_last[left].max(seg_last[right]) + 1;
                if lo == usize::MAX {
                    0..0
                } else {
                    lo..hi
                }
            })
            .collect();

        Self {
            knots,
            n,
            pieces,
            piece_start,
            knot_span,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn knots(&self) -> &Arc<[f64]> {
        &self.knots
    }

    /// Variance of increment `i` (0-based) for knot values `values`.
    #[inline]
    pub fn variance(&self, values: &[f64], i: usize) -> f64 {
        self.pieces[self.piece_start[i]..self.piece_start[i + 1]]
            .iter()
            .map(|p| {
                let (v0, v1) = (values[p.segment], values[p.segment + 1]);
                let sa = interp(v0, v1, p.lam_lo);
                let sb = interp(v0, v1, p.lam_hi);
                p.len_third * (sa * sa + sa * sb + sb * sb)
            })
            .sum()
    }

    pub fn variances(&self, values: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.variance(values, i)).collect()
    }

    /// Increments whose variance depends on knot `knot`.
    pub fn affected(&self, knot: usize) -> Range<usize> {
        self.knot_span[knot].clone()
    }
}

#[inline]
fn interp(v0: f64, v1: f64, lam: f64) -> f64 {
    if lam == 1.0 {
        v1
    } else {
        v0 + (v1 - v0) * lam
    }
}
