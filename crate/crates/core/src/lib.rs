//! Exact photon-counting statistics of a lossless Mach-Zehnder interferometer
//! and Bayesian phase-estimation strategies built on them.
//!
//! Layering, bottom-up: [`fock`] computes outcome distributions, [`bayes`]
//! turns them into posterior estimators and mean-square errors, [`states`]
//! builds the analytic input families, [`optimizer`] searches for optimal
//! inputs, [`scaling`] holds the closed-form shot-count laws and
//! [`monte_carlo`] simulates trajectories against a hidden true phase.

pub mod bayes;
pub mod error;
pub mod fock;
pub mod monte_carlo;
pub mod numeric;
pub mod optimizer;
pub mod scaling;
pub mod states;

pub use error::{Error, Result};
