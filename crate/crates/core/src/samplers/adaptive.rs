use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::cholesky;
use crate::model::StaticParams;
use crate::{Error, Result};

/// Scale of the adaptive component, `2.38^2 / d` times the chain covariance.
const ADAPTIVE_SCALE: f64 = 2.38;
/// Scale of the fixed component, `0.1^2 / d` times the identity.
const FIXED_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    /// Probability of the adaptive component once adaptation is active.
    pub w1: f64,
    /// Number of recorded states before the adaptive component is used.
    pub warmup: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { w1: 0.95, warmup: 100 }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.w1 > 0.0 && self.w1 <= 1.0) {
            return Err(Error::InvalidConfig("w1 must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Running mean and covariance of the chain's static parameters.
///
/// Welford's recursion keeps the unbiased (`n - 1`) sample covariance of all
/// states seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub iteration: usize,
    pub running_mean: Vec<f64>,
    m2: Vec<f64>,
    dim: usize,
    pub config: AdaptiveConfig,
}

impl AdaptiveState {
    pub fn new(dim: usize, config: AdaptiveConfig) -> Self {
        Self {
            iteration: 0,
            running_mean: vec![0.0; dim],
            m2: vec![0.0; dim * dim],
            dim,
            config,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `d x d` sample covariance; zeros before two states.
    pub fn running_covariance(&self) -> Vec<f64> {
        if self.iteration < 2 {
            return vec![0.0; self.dim * self.dim];
        }
        let k = 1.0 / (self.iteration - 1) as f64;
        self.m2.iter().map(|v| v * k).collect()
    }

    pub fn adaptation_active(&self) -> bool {
        self.iteration > self.config.warmup
    }

    /// Rank-one update with a new chain state.
    pub fn update(&mut self, params: &StaticParams) {
        let x = params.to_vector();
        self.update_vector(&x);
    }

    pub fn update_vector(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        self.iteration += 1;
        let n = self.iteration as f64;
        let delta: Vec<f64> = x.iter().zip(&self.running_mean).map(|(a, m)| a - m).collect();
        for (m, dl) in self.running_mean.iter_mut().zip(&delta) {
            *m += dl / n;
        }
        for i in 0..d {
            let after_i = x[i] - self.running_mean[i];
            for j in 0..d {
                // symmetric form of delta_before * delta_after^T
                let after_j = x[j] - self.running_mean[j];
                self.m2[i * d + j] += 0.5 * (delta[i] * after_j + after_i * delta[j]);
            }
        }
    }
}

/// Which mixture component produced a proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalComponent {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    /// May lie outside the unit interval.
    pub params: StaticParams,
    pub component: ProposalComponent,
}

/// Draws from the two-component Gaussian random-walk mixture centred on the
/// current state. Both components are symmetric, so the proposal ratio in the
/// acceptance probability is exactly one.
pub fn adaptive_propose<R: Rng + ?Sized>(
    current: &StaticParams,
    adapt: &AdaptiveState,
    rng: &mut R,
) -> Proposal {
    let x = current.to_vector();
    let d = x.len();
    debug_assert_eq!(d, adapt.dim());
    let use_adaptive = adapt.adaptation_active() && rng.random::<f64>() < adapt.config.w1;
    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let factor = if use_adaptive {
        let k = ADAPTIVE_SCALE * ADAPTIVE_SCALE / d as f64;
        let cov: Vec<f64> = adapt.running_covariance().iter().map(|c| c * k).collect();
        cholesky(&cov, d)
    } else {
        None
    };
    let (y, component) = match factor {
        Some(l) => {
            let y = (0..d)
                .map(|i| x[i] + (0..=i).map(|j| l[i * d + j] * z[j]).sum::<f64>())
                .collect::<Vec<_>>();
            (y, ProposalComponent::Adaptive)
        }
        None => {
            let sd = FIXED_SCALE / (d as f64).sqrt();
            let y = x.iter().zip(&z).map(|(xi, zi)| xi + sd * zi).collect::<Vec<_>>();
            (y, ProposalComponent::Fixed)
        }
    };
    Proposal {
        params: StaticParams::from_vector(&y).expect("proposal keeps the parameter shape"),
        component,
    }
}
