//! Markov chain samplers over `(alpha, beta, h, g, w)`.
//!
//! [`run_pmcmc`] is the particle marginal Metropolis-Hastings chain: static
//! parameters move by the adaptive mixture random walk, the path is proposed
//! by a [`PathEstimator`] (normally the Rao-Blackwellised filter), and the
//! acceptance ratio uses the estimator's evidence in place of the intractable
//! marginal likelihood. [`run_gibbs`] is the blocked MH-within-Gibbs baseline.

mod adaptive;
mod gibbs;
mod pmcmc;

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

pub use adaptive::{adaptive_propose, AdaptiveConfig, AdaptiveState, Proposal, ProposalComponent};
pub use gibbs::{
    gibbs_block_step, gibbs_initial_state, joint_log_density, observation_log_likelihood,
    run_gibbs, run_gibbs_observed, BlockTarget, GibbsConfig, GibbsRunConfig,
};
pub use pmcmc::{
    initial_state, pmcmc_step, run_pmcmc, run_pmcmc_from, run_pmcmc_observed, PmcmcConfig, StepReport,
};

use crate::filtering::{FilterOutput, RbsirFilter};
use crate::model::{Frame, LatentPath, StaticParams};
use crate::Result;

/// Source of path proposals and evidence estimates for given static
/// parameters.
pub trait PathEstimator {
    fn estimate<R: Rng + ?Sized>(
        &mut self,
        params: &StaticParams,
        rng: &mut R,
    ) -> Result<FilterOutput>;
}

/// The production estimator: a Rao-Blackwellised SIR filter on one frame.
#[derive(Debug, Clone)]
pub struct RbpfEstimator<'a> {
    frame: &'a Frame,
    filter: RbsirFilter,
}

impl<'a> RbpfEstimator<'a> {
    pub fn new(frame: &'a Frame, filter: RbsirFilter) -> Self {
        Self { frame, filter }
    }
}

impl PathEstimator for RbpfEstimator<'_> {
    fn estimate<R: Rng + ?Sized>(
        &mut self,
        params: &StaticParams,
        rng: &mut R,
    ) -> Result<FilterOutput> {
        self.filter.run(self.frame, params, rng)
    }
}

/// A state of either chain. For the PMCMC chain `log_marginal_likelihood`
/// is the cached evidence estimate; for the Gibbs chain it is the
/// observation log likelihood `log p(y | h, g, w)` of the current path.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub params: StaticParams,
    pub path: Arc<LatentPath>,
    pub log_marginal_likelihood: f64,
    pub log_prior: f64,
}

/// Recorded chain output.
#[derive(Debug, Clone, Default)]
pub struct ChainTrace {
    /// Every `thin`-th state, `iterations / thin` entries.
    pub states: Vec<ChainState>,
    /// Acceptance of the static-parameter move, one per iteration.
    pub accepted: Vec<bool>,
    pub acceptance_rate: f64,
    /// Burn-in, in iterations.
    pub burnin: usize,
    pub thin: usize,
    /// PMCMC iterations whose filter run degenerated (counted as rejections).
    pub filter_failures: usize,
    /// Gibbs only: acceptance rate of every block move.
    pub block_acceptance_rate: Option<f64>,
}

impl ChainTrace {
    /// States recorded after the burn-in period.
    pub fn post_burnin(&self) -> &[ChainState] {
        let skip = self.burnin.div_ceil(self.thin.max(1)).min(self.states.len());
        &self.states[skip..]
    }
}

/// Thinning rule: keep everything unless the chain is long enough to need
/// the memory guard.
pub fn default_thin(iterations: usize) -> usize {
    if iterations > 100_000 {
        10
    } else {
        1
    }
}

/// Operation count of one PMCMC iteration:
/// `2 L^2 + T L + N T (2 L + 2) + N`.
pub fn pmcmc_iteration_cost(n: usize, t: usize, l: usize) -> f64 {
    let (n, t, l) = (n as f64, t as f64, l as f64);
    2.0 * l * l + t * l + n * t * (2.0 * l + 2.0) + n
}

/// Operation count of one deterministic-scan Gibbs sweep:
/// `6 T^2 L^2 + 10 T L + 4 L`.
pub fn gibbs_iteration_cost(t: usize, l: usize) -> f64 {
    let (t, l) = (t as f64, l as f64);
    6.0 * t * t * l * l + 10.0 * t * l + 4.0 * l
}

/// Gibbs chain length with the same total operation count as a PMCMC chain
/// of `pmcmc_iterations`, scaled by `multiplier` (at least one sweep).
pub fn matched_gibbs_iterations(
    pmcmc_iterations: usize,
    n: usize,
    t: usize,
    l: usize,
    multiplier: f64,
) -> usize {
    let ratio = pmcmc_iteration_cost(n, t, l) / gibbs_iteration_cost(t, l);
    (libm::round(pmcmc_iterations as f64 * ratio * multiplier) as usize).max(1)
}
