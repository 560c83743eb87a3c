//! Multihypothesis testing with observation control.
//!
//! A [`SensingModel`] assigns a pmf over a finite observation alphabet to each
//! (hypothesis, control) pair. On top of it this crate computes
//!
//! * information measures (KL divergence, Chernoff information, tilted pmfs),
//! * the optimal fixed-sample error exponents for open-loop control and the
//!   bounds for causal control,
//! * the maximin control distributions that drive the sequential Chernoff test,
//!
//! and runs the fixed-sample and sequential tests under seeded Monte Carlo so
//! that empirical error rates and stopping times can be checked against the
//! closed forms.
//!
//! All logarithms are natural; exponents are in nats.

#[cfg(feature = "cli")]
pub mod cli;
pub mod divergences;
pub mod error;
pub mod exponents;
pub mod fss;
pub mod games;
pub mod model;
pub mod montecarlo;
pub mod optimize;
pub mod policies;
pub mod rng;
pub mod sequential;

pub use error::{Error, Result};
pub use games::{MixedStrategy, PayoffMatrix};
pub use model::{Pmf, PositivityReport, SensingModel};
