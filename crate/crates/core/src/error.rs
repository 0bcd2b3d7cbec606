use alloc::string::String;

use crate::model::Violation;

/// Errors raised by the estimation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("class violation: {0}")]
    Class(Violation),
    #[error("invalid class parameters: {0}")]
    InvalidParams(&'static str),
    #[error("time {0} outside the admissible range")]
    Domain(f64),
    #[error("increment {index} has non-positive variance {variance}")]
    DegenerateVariance { index: usize, variance: f64 },
    #[error("net would hold {count} members, above the cap of {cap}")]
    NetTooLarge { count: u128, cap: usize },
    #[error("net resolution must be positive and finite, got {0}")]
    BadEps(f64),
    #[error("posterior sample is empty")]
    EmptyChain,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("likelihood evaluated to a non-finite value at iteration {0}")]
    NonFiniteLikelihood(usize),
    #[error("no net member satisfies the restriction")]
    EmptyRestriction,
    #[error("least-squares design is degenerate")]
    DegenerateDesign,
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::Class(v)
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
