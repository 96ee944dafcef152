//! Simulation and inference for finite sets whose "switching" elements
//! project as one of two stable types at observation time.
//!
//! The crate is organised by concern:
//!
//! * [`model`]: population counts, the probability range of type A and the
//!   short-term mean for a given switching state.
//! * [`dynamics`]: finite modular switching schemes and functional-graph
//!   analysis of their orbits.
//! * [`sampler`]: seeded simulation of epochs of with-replacement draws.
//! * [`inference`]: closed-form moments, class-size estimation, the
//!   threshold decision rule and the Bayesian observation model.
//! * [`paradox`]: exhaustive Simpson-inversion analysis of tables with
//!   interval-valued numerators.
//! * [`cli`]: the `switchset` command-line front end.

pub mod cli;
pub mod dynamics;
pub mod format;
pub mod inference;
pub mod model;
pub mod paradox;
pub mod sampler;

pub use model::{Interval, Outcome, Rational, SetConfig};
