//! Runner, file formats and command line for `disperse-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod runner;

pub use error::{HarnessError, Result};
