//! Dynamical Casimir-Polder potentials between a two-level atom and a
//! perfectly conducting plate, for a bare initial state and for partially
//! dressed states prepared by sudden frequency and/or position quenches.

pub mod cavity;
pub mod dm;
pub mod error;
pub mod kernels;
pub mod numeric;
pub mod oracle;
pub mod plot;
pub mod scenarios;
pub mod specfun;
pub mod units;

pub use error::{Error, Result};
