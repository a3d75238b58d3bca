//! Rao-Blackwellised SIR filtering.
//!
//! The relay-to-destination channel `g` enters the observation linearly once
//! `h` and `w` are fixed, so each particle over `(h, w)` carries a scalar
//! complex Kalman filter for `g`. Relays are conditionally independent, so an
//! `L`-relay run is `L` single-relay filters whose log evidences add.

mod kalman;
mod particles;
mod resample;
mod rbsir;

pub use kalman::{kalman_predict, kalman_update, KalmanStat};
pub use particles::{Particle, ParticleSystem, DEFAULT_ESS_THRESHOLD};
pub use rbsir::{run_rbsir, FilterOutput, Genie, RbsirFilter};
pub use resample::{stratified_resample, stratified_resample_into};
