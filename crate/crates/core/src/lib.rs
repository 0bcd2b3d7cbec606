//! Non-parametric Bayesian estimation of a deterministic dispersion
//! coefficient `s` in `dX_t = s(t) dW_t`, observed on the grid `t_i = i/n`.
//!
//! The crate is `no_std` (it needs `alloc`). It covers:
//!
//! * [`model`]: the Lipschitz class of dispersion coefficients, represented
//!   by piecewise-linear functions with exact integrals and distances.
//! * [`simulate`]: exact sampling of the discrete observations.
//! * [`likelihood`]: log-likelihood, log-likelihood ratio and its
//!   martingale/deterministic decomposition, Gaussian KL increments.
//! * [`prior`]: finite sup-norm nets used as sieve priors, small-ball masses
//!   and dyadic shells around the truth.
//! * [`posterior`]: exact posteriors over a net and Metropolis chains over the
//!   continuous knot-value polytope.
//! * [`experiments`]: the contraction-rate benchmark and numerical checks of
//!   the bounds that drive it.
//!
//! IO, parallel fan-out and the command line live in `disperse-harness`.

#![no_std]

extern crate alloc;

pub mod design;
pub mod error;
pub mod experiments;
pub mod likelihood;
pub mod model;
pub mod posterior;
pub mod prior;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use model::{make_piecewise_linear, ClassParams, DispersionFn, Metric, Violation};
pub use simulate::{Observations, SeedRecord};
