//! Simulation and verification lab for averaging of monotone stochastic PDEs
//! with fast-oscillating coefficients.
//!
//! The crate discretizes two model families on a 1-D Dirichlet grid, integrates
//! them with a strongly monotone implicit Euler–Maruyama scheme, compares laws
//! with the bounded-Lipschitz metric and runs the verification experiments.

pub mod cli;
pub mod coefficients;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod measures;
pub mod rng;
pub mod spatial;
pub mod suite;

pub use error::{Error, Result};
