//! Joint channel tracking and static-parameter estimation for dual-hop
//! amplify-and-forward relay networks.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs plus an explicit random stream, so the std
//! companion crate can run many chains in parallel and stay reproducible.
//!
//! Layout:
//!
//! - [`model`]: generative model, priors, densities and the frame simulator.
//! - [`filtering`]: per-particle Kalman recursion and the Rao-Blackwellised
//!   SIR filter producing a path sample and a marginal-likelihood estimate.
//! - [`samplers`]: adaptive mixture proposal, particle marginal
//!   Metropolis-Hastings chain and the MH-within-Gibbs baseline.
//! - [`bcrlb`]: recursive Bayesian Fisher information and the marginalised
//!   lower bound on path-space MSE.
//! - [`estimate`]: posterior summaries of a chain and MSE against truth.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bcrlb;
mod complex;
mod error;
pub mod estimate;
pub mod filtering;
pub mod linalg;
pub mod math;
pub mod model;
pub mod rng;
pub mod samplers;

pub use complex::ComplexSample;
pub use error::{Error, Result};
