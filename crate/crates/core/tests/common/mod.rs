#![allow(dead_code)]

use disperse_core::rng::{substream, StreamRng};
use disperse_core::{make_piecewise_linear, ClassParams, DispersionFn};
use rand::Rng;

pub fn params() -> ClassParams {
    ClassParams::new(0.5, 2.0, 1.0).unwrap()
}

pub fn rng(seed: u64) -> StreamRng {
    substream(seed, 0)
}

/// Random class member with 2..=max_knots knots at random positions.
pub fn random_member<R: Rng>(rng: &mut R, p: &ClassParams, max_knots: usize) -> DispersionFn {
    let k = rng.random_range(2..=max_knots);
    let mut knots: Vec<f64> = (0..k - 2).map(|_| rng.random::<f64>()).collect();
    knots.push(0.0);
    knots.push(1.0);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut values = vec![rng.random_range(p.kappa..=p.k_upper)];
    for w in knots.windows(2) {
        let slope = rng.random_range(-p.m_lip..=p.m_lip);
        let prev = *values.last().unwrap();
        values.push((prev + slope * (w[1] - w[0])).clamp(p.kappa, p.k_upper));
    }
    make_piecewise_linear(knots, values, p).unwrap()
}

/// Adaptive Simpson quadrature with a Richardson-corrected stopping rule.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}
