//! Exact sampling of `X_{i/n}`, `i = 0..n`, under `dX_t = s(t) dW_t`, `X_0 = 0`.
//!
//! The increments `Y_i = X_{i/n} - X_{(i-1)/n}` are independent centred
//! Gaussians with variance `int_{(i-1)/n}^{i/n} s^2`, so they are drawn
//! directly. There is no time stepping and no discretisation error.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::DispersionFn;
use crate::rng::substream;

/// Identifies the random stream a sample was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedRecord {
    pub base_seed: u64,
    pub stream: u64,
}

impl SeedRecord {
    pub fn new(base_seed: u64, stream: u64) -> Self {
        Self { base_seed, stream }
    }
}

impl fmt::Display for SeedRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.base_seed, self.stream)
    }
}

/// Discrete observations of one path on the uniform grid.
///
/// `values[0] = 0` and `increments[i-1] = values[i] - values[i-1]`; the
/// increments are stored as those exact differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    values: Vec<f64>,
    increments: Vec<f64>,
    seed: Option<SeedRecord>,
}

impl Observations {
    /// Builds observations from path values `X_{t_0}, ..., X_{t_n}`.
    pub fn from_values(values: Vec<f64>, seed: Option<SeedRecord>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Config("observations need n >= 1".into()));
        }
        if values[0] != 0.0 {
            return Err(Error::Config("observed path must start at 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("observed values must be finite".into()));
        }
        let increments = values.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            values,
            increments,
            seed,
        })
    }

    /// Builds observations by accumulating increments from `X_0 = 0`.
    pub fn from_increments(increments: &[f64], seed: Option<SeedRecord>) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut x = 0.0;
        values.push(x);
        for &y in increments {
            x += y;
            values.push(x);
        }
        Self::from_values(values, seed)
    }

    pub fn n(&self) -> usize {
        self.increments.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn seed(&self) -> Option<SeedRecord> {
        self.seed
    }

    /// Grid time `t_i = i/n`.
    pub fn time(&self, i: usize) -> f64 {
        grid_time(i, self.n())
    }
}

/// `i/n`, exact at both ends.
#[inline]
pub fn grid_time(i: usize, n: usize) -> f64 {
    i as f64 / n as f64
}

/// Variances `int_{(i-1)/n}^{i/n} s^2`, `i = 1..n`.
pub fn increment_variances(s: &DispersionFn, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| s.integral_sq_unchecked(grid_time(i - 1, n), grid_time(i, n)))
        .collect()
}

/// Draws observations from the law of `X` under `s0` using stream `seed`.
pub fn sample_observations(s0: &DispersionFn, n: usize, seed: SeedRecord) -> Result<Observations> {
    let mut rng = substream(seed.base_seed, seed.stream);
    let mut obs = sample_with_rng(s0, n, &mut rng)?;
    obs.seed = Some(seed);
    Ok(obs)
}

/// Same as [`sample_observations`] but reads from a caller-owned generator.
pub fn sample_with_rng<R: Rng + ?Sized>(
    s0: &DispersionFn,
    n: usize,
    rng: &mut R,
) -> Result<Observations> {
    if n == 0 {
        return Err(Error::Config("grid size n must be at least 1".into()));
    }
    let increments: Vec<f64> = increment_variances(s0, n)
        .into_iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            libm::sqrt(v) * z
        })
        .collect();
    Observations::from_increments(&increments, None)
}
