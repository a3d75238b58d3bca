use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::adaptive::{adaptive_propose, AdaptiveConfig, AdaptiveState, ProposalComponent};
use super::{default_thin, ChainState, ChainTrace, PathEstimator};
use crate::model::{log_static_prior, sample_static_prior, PriorConfig};
use crate::rng::open_unit;
use crate::{Error, Result};

/// Redraws of the initial parameters allowed when the first filter run
/// degenerates.
const MAX_INIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PmcmcConfig {
    pub iterations: usize,
    pub burnin: usize,
    /// `None` applies [`default_thin`].
    pub thin: Option<usize>,
    pub prior: PriorConfig,
    pub adaptive: AdaptiveConfig,
}

impl PmcmcConfig {
    pub fn new(iterations: usize, burnin: usize) -> Self {
        Self {
            iterations,
            burnin,
            thin: None,
            prior: PriorConfig::default(),
            adaptive: AdaptiveConfig::default(),
        }
    }

    pub fn effective_thin(&self) -> usize {
        self.thin.unwrap_or_else(|| default_thin(self.iterations)).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burnin {
            return Err(Error::InvalidConfig("iterations must exceed burn-in"));
        }
        self.adaptive.validate()
    }
}

/// What happened in one PMCMC iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepReport {
    pub accepted: bool,
    /// False when the proposal left the prior support and was rejected
    /// without running the filter.
    pub filter_ran: bool,
    /// The filter degenerated; the proposal was rejected.
    pub filter_failed: bool,
    pub component: ProposalComponent,
}

/// One particle marginal MH iteration. The incumbent's cached evidence is
/// never recomputed. The adaptive state absorbs the post-decision parameters.
pub fn pmcmc_step<E: PathEstimator, R: Rng + ?Sized>(
    state: &mut ChainState,
    adapt: &mut AdaptiveState,
    estimator: &mut E,
    prior: &PriorConfig,
    rng: &mut R,
) -> StepReport {
    let proposal = adaptive_propose(&state.params, adapt, rng);
    let mut report = StepReport {
        accepted: false,
        filter_ran: false,
        filter_failed: false,
        component: proposal.component,
    };
    let log_prior = log_static_prior(&proposal.params, prior);
    if log_prior.is_finite() {
        report.filter_ran = true;
        match estimator.estimate(&proposal.params, rng) {
            Ok(out) if out.log_marginal_likelihood.is_finite() => {
                let log_ratio = (out.log_marginal_likelihood + log_prior)
                    - (state.log_marginal_likelihood + state.log_prior);
                if open_unit(rng).ln() < log_ratio.min(0.0) {
                    *state = ChainState {
                        params: proposal.params,
                        path: Arc::new(out.path),
                        log_marginal_likelihood: out.log_marginal_likelihood,
                        log_prior,
                    };
                    report.accepted = true;
                }
            }
            _ => report.filter_failed = true,
        }
    }
    adapt.update(&state.params);
    report
}

/// Initial state: parameters from the prior and one filter run for the path
/// and the cached evidence.
pub fn initial_state<E: PathEstimator, R: Rng + ?Sized>(
    estimator: &mut E,
    prior: &PriorConfig,
    relays: usize,
    rng: &mut R,
) -> Result<ChainState> {
    let mut last_err = Error::DegenerateFilter { t: 0 };
    for _ in 0..MAX_INIT_ATTEMPTS {
        let params = sample_static_prior(prior, relays, rng)?;
        match estimator.estimate(&params, rng) {
            Ok(out) if out.log_marginal_likelihood.is_finite() => {
                let log_prior = log_static_prior(&params, prior);
                return Ok(ChainState {
                    params,
                    path: Arc::new(out.path),
                    log_marginal_likelihood: out.log_marginal_likelihood,
                    log_prior,
                });
            }
            Ok(_) => {}
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Runs the adaptive PMCMC chain for `config.iterations` iterations.
pub fn run_pmcmc<E: PathEstimator, R: Rng + ?Sized>(
    estimator: &mut E,
    relays: usize,
    config: &PmcmcConfig,
    rng: &mut R,
) -> Result<ChainTrace> {
    config.validate()?;
    let state = initial_state(estimator, &config.prior, relays, rng)?;
    run_pmcmc_from(estimator, state, config, rng)
}

/// Runs the chain from a given initial state.
pub fn run_pmcmc_from<E: PathEstimator, R: Rng + ?Sized>(
    estimator: &mut E,
    state: ChainState,
    config: &PmcmcConfig,
    rng: &mut R,
) -> Result<ChainTrace> {
    run_pmcmc_observed(estimator, state, config, rng, &mut |_| {})
}

/// [`run_pmcmc_from`] calling `on_iteration(j)` after every completed
/// iteration `j` (1-based).
pub fn run_pmcmc_observed<E: PathEstimator, R: Rng + ?Sized>(
    estimator: &mut E,
    mut state: ChainState,
    config: &PmcmcConfig,
    rng: &mut R,
    on_iteration: &mut dyn FnMut(usize),
) -> Result<ChainTrace> {
    config.validate()?;
    let thin = config.effective_thin();
    let mut adapt = AdaptiveState::new(2 * state.params.relays(), config.adaptive);
    adapt.update(&state.params);
    let mut states = Vec::with_capacity(config.iterations / thin);
    let mut accepted = Vec::with_capacity(config.iterations);
    let mut failures = 0;
    for j in 0..config.iterations {
        let report = pmcmc_step(&mut state, &mut adapt, estimator, &config.prior, rng);
        accepted.push(report.accepted);
        failures += usize::from(report.filter_failed);
        if (j + 1) % thin == 0 {
            states.push(state.clone());
        }
        on_iteration(j + 1);
    }
    let acceptance_rate =
        accepted.iter().filter(|&&a| a).count() as f64 / accepted.len().max(1) as f64;
    Ok(ChainTrace {
        states,
        accepted,
        acceptance_rate,
        burnin: config.burnin,
        thin,
        filter_failures: failures,
        block_acceptance_rate: None,
    })
}
