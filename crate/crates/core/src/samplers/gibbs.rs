use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{default_thin, ChainState, ChainTrace};
use crate::math::log_cn;
use crate::model::{
    jakes_step, log_static_prior, sample_static_prior, Frame, LatentPath, PriorConfig, StaticParams,
};
use crate::rng::{complex_normal, open_unit};
use crate::{ComplexSample, Error, Result};

/// Which coordinates a Gibbs move perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockTarget {
    G,
    H,
    W,
    /// All `(alpha, beta)` jointly.
    Static,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsConfig {
    /// Block length `tau`; must divide the frame length.
    pub block_length: usize,
    /// Scans used to tune the per-block random-walk scales before recording.
    pub tuning_iterations: usize,
    pub target_acceptance: f64,
    /// Starting per-coordinate standard deviations before tuning.
    pub initial_path_scale: f64,
    pub initial_static_scale: f64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            block_length: 10,
            tuning_iterations: 50,
            target_acceptance: 0.2,
            initial_path_scale: 0.3,
            initial_static_scale: 0.02,
        }
    }
}

impl GibbsConfig {
    pub fn block_count(&self, t: usize) -> Result<usize> {
        if self.block_length == 0 || !t.is_multiple_of(self.block_length) {
            return Err(Error::InvalidConfig("block length must divide the frame length"));
        }
        Ok(t / self.block_length)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsRunConfig {
    pub gibbs: GibbsConfig,
    pub iterations: usize,
    pub burnin: usize,
    pub thin: Option<usize>,
    pub prior: PriorConfig,
}

/// Full joint log density
/// `log p(alpha, beta) + log p(h) + log p(g) + log p(w) + log p(y | h, g, w)`.
pub fn joint_log_density(
    params: &StaticParams,
    path: &LatentPath,
    frame: &Frame,
    prior: &PriorConfig,
) -> f64 {
    let lp = log_static_prior(params, prior);
    if !lp.is_finite() {
        return f64::NEG_INFINITY;
    }
    let t_len = frame.t();
    let mut total = lp;
    for l in 0..frame.relays() {
        let (alpha, beta) = params.relay(l);
        total += chain_terms(path.h.row(l), alpha, frame.noise.sigma2_h, 0..t_len);
        total += chain_terms(path.g.row(l), beta, frame.noise.sigma2_g, 0..t_len);
        total += relay_noise_terms(path.w.row(l), frame.noise.sigma2_w, 0..t_len);
        total += observation_terms(frame, path, l, 0..t_len);
    }
    total
}

/// `log p(y | h, g, w)` over all relays and times.
pub fn observation_log_likelihood(path: &LatentPath, frame: &Frame) -> f64 {
    (0..frame.relays()).map(|l| observation_terms(frame, path, l, 0..frame.t())).sum()
}

/// AR(1) prior terms of `x` that involve any index in `block`: the
/// stationary initial term if `block` starts at 0 plus every transition into
/// or out of the block.
fn chain_terms(x: &[ComplexSample], coeff: f64, var: f64, block: Range<usize>) -> f64 {
    let mut acc = 0.0;
    if block.start == 0 {
        acc += log_cn(x[0], ComplexSample::ZERO, var);
    }
    let q = (1.0 - coeff * coeff) * var;
    let first = block.start.max(1);
    let last = (block.end + 1).min(x.len());
    for t in first..last {
        acc += log_cn(x[t], x[t - 1].scale(coeff), q);
    }
    acc
}

fn relay_noise_terms(w: &[ComplexSample], var: f64, block: Range<usize>) -> f64 {
    w[block].iter().map(|&z| log_cn(z, ComplexSample::ZERO, var)).sum()
}

fn observation_terms(frame: &Frame, path: &LatentPath, l: usize, block: Range<usize>) -> f64 {
    let (y, h, g, w) = (frame.y.row(l), path.h.row(l), path.g.row(l), path.w.row(l));
    let s = &frame.config.pilots;
    block
        .map(|t| log_cn(y[t], frame.relay.apply(s[t] * h[t] + w[t]) * g[t], frame.noise.sigma2_v))
        .sum()
}

/// Log density terms touched by a move on `(relay, target, block)`.
fn local_log_density(
    params: &StaticParams,
    path: &LatentPath,
    frame: &Frame,
    prior: &PriorConfig,
    relay: usize,
    target: BlockTarget,
    block: Range<usize>,
) -> f64 {
    let noise = &frame.noise;
    match target {
        BlockTarget::H => {
            chain_terms(path.h.row(relay), params.alpha[relay], noise.sigma2_h, block.clone())
                + observation_terms(frame, path, relay, block)
        }
        BlockTarget::G => {
            chain_terms(path.g.row(relay), params.beta[relay], noise.sigma2_g, block.clone())
                + observation_terms(frame, path, relay, block)
        }
        BlockTarget::W => {
            relay_noise_terms(path.w.row(relay), noise.sigma2_w, block.clone())
                + observation_terms(frame, path, relay, block)
        }
        BlockTarget::Static => {
            let lp = log_static_prior(params, prior);
            if !lp.is_finite() {
                return f64::NEG_INFINITY;
            }
            let t_len = frame.t();
            lp + (0..params.relays())
                .map(|l| {
                    chain_terms(path.h.row(l), params.alpha[l], noise.sigma2_h, 1..t_len)
                        + chain_terms(path.g.row(l), params.beta[l], noise.sigma2_g, 1..t_len)
                })
                .sum::<f64>()
        }
    }
}

fn target_row(path: &mut LatentPath, target: BlockTarget, relay: usize) -> &mut [ComplexSample] {
    match target {
        BlockTarget::H => path.h.row_mut(relay),
        BlockTarget::G => path.g.row_mut(relay),
        BlockTarget::W => path.w.row_mut(relay),
        BlockTarget::Static => unreachable!("static move has no path row"),
    }
}

/// One Gaussian random-walk MH move on a block of one relay's path (or on
/// all static parameters for [`BlockTarget::Static`], where `relay` and
/// `block` are ignored). `scale` is the per-real-coordinate standard
/// deviation. Returns whether the move was accepted.
#[allow(clippy::too_many_arguments)]
pub fn gibbs_block_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    relay: usize,
    block: Range<usize>,
    target: BlockTarget,
    frame: &Frame,
    prior: &PriorConfig,
    scale: f64,
    rng: &mut R,
) -> bool {
    let path = Arc::make_mut(&mut state.path);
    if target == BlockTarget::Static {
        let before = local_log_density(&state.params, path, frame, prior, 0, target, 0..0);
        let proposed: Vec<f64> = state
            .params
            .to_vector()
            .iter()
            .map(|x| x + scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let proposed = StaticParams::from_vector(&proposed).expect("shape preserved");
        if !proposed.is_stationary() {
            return false;
        }
        let after = local_log_density(&proposed, path, frame, prior, 0, target, 0..0);
        if open_unit(rng).ln() < (after - before).min(0.0) {
            state.log_prior = log_static_prior(&proposed, prior);
            state.params = proposed;
            return true;
        }
        return false;
    }

    let before =
        local_log_density(&state.params, path, frame, prior, relay, target, block.clone());
    let saved: Vec<ComplexSample> = target_row(path, target, relay)[block.clone()].to_vec();
    for z in &mut target_row(path, target, relay)[block.clone()] {
        let dre: f64 = rng.sample(StandardNormal);
        let dim: f64 = rng.sample(StandardNormal);
        *z += ComplexSample::new(dre, dim).scale(scale);
    }
    let after = local_log_density(&state.params, path, frame, prior, relay, target, block.clone());
    if open_unit(rng).ln() < (after - before).min(0.0) {
        true
    } else {
        target_row(path, target, relay)[block].copy_from_slice(&saved);
        false
    }
}

struct Scan {
    relays: usize,
    blocks: usize,
    block_length: usize,
}

impl Scan {
    /// Deterministic order: static, every G block, every H block, every W
    /// block. Index 0 of the scale table is the static move.
    fn moves(&self) -> impl Iterator<Item = (usize, BlockTarget, usize, Range<usize>)> + '_ {
        let path_moves = [BlockTarget::G, BlockTarget::H, BlockTarget::W]
            .into_iter()
            .enumerate()
            .flat_map(move |(ti, target)| {
                (0..self.relays).flat_map(move |l| {
                    (0..self.blocks).map(move |k| {
                        let id = 1 + (ti * self.relays + l) * self.blocks + k;
                        let range = k * self.block_length..(k + 1) * self.block_length;
                        (id, target, l, range)
                    })
                })
            });
        core::iter::once((0, BlockTarget::Static, 0, 0..0)).chain(path_moves)
    }

    fn len(&self) -> usize {
        1 + 3 * self.relays * self.blocks
    }
}

/// Starting point drawn entirely from the prior: static parameters from the
/// Beta priors, then `h`, `g`, `w` from their stationary dynamics.
pub fn gibbs_initial_state<R: Rng + ?Sized>(
    frame: &Frame,
    prior: &PriorConfig,
    rng: &mut R,
) -> Result<ChainState> {
    let params = sample_static_prior(prior, frame.relays(), rng)?;
    let noise = frame.noise;
    let mut path = LatentPath::zeros(frame.relays(), frame.t());
    for l in 0..frame.relays() {
        let (alpha, beta) = params.relay(l);
        let mut h = complex_normal(rng, noise.sigma2_h);
        let mut g = complex_normal(rng, noise.sigma2_g);
        for t in 0..frame.t() {
            if t > 0 {
                h = jakes_step(h, alpha, complex_normal(rng, noise.sigma2_h));
                g = jakes_step(g, beta, complex_normal(rng, noise.sigma2_g));
            }
            path.h.set(l, t, h);
            path.g.set(l, t, g);
            path.w.set(l, t, complex_normal(rng, noise.sigma2_w));
        }
    }
    Ok(ChainState {
        log_marginal_likelihood: observation_log_likelihood(&path, frame),
        log_prior: log_static_prior(&params, prior),
        params,
        path: Arc::new(path),
    })
}

/// Deterministic-scan MH-within-Gibbs chain from `init`. Per-block scales
/// are first tuned towards the target acceptance rate by stochastic
/// approximation; tuning scans are not recorded.
pub fn run_gibbs<R: Rng + ?Sized>(
    frame: &Frame,
    config: &GibbsRunConfig,
    init: ChainState,
    rng: &mut R,
) -> Result<ChainTrace> {
    run_gibbs_observed(frame, config, init, rng, &mut |_| {})
}

/// [`run_gibbs`] calling `on_iteration(j)` after every recorded-phase scan
/// `j` (1-based).
pub fn run_gibbs_observed<R: Rng + ?Sized>(
    frame: &Frame,
    config: &GibbsRunConfig,
    init: ChainState,
    rng: &mut R,
    on_iteration: &mut dyn FnMut(usize),
) -> Result<ChainTrace> {
    if config.iterations <= config.burnin {
        return Err(Error::InvalidConfig("iterations must exceed burn-in"));
    }
    let scan = Scan {
        relays: frame.relays(),
        blocks: config.gibbs.block_count(frame.t())?,
        block_length: config.gibbs.block_length,
    };
    if init.path.relays() != frame.relays() || init.path.len() != frame.t() {
        return Err(Error::ShapeMismatch {
            expected: frame.relays() * frame.t(),
            got: init.path.relays() * init.path.len(),
        });
    }
    let prior = &config.prior;
    let mut log_scales = vec![config.gibbs.initial_path_scale.ln(); scan.len()];
    log_scales[0] = config.gibbs.initial_static_scale.ln();
    let mut state = init;

    for i in 0..config.gibbs.tuning_iterations {
        let gain = 3.0 / ((i + 1) as f64).powf(0.6);
        for (id, target, l, range) in scan.moves() {
            let acc = gibbs_block_step(
                &mut state, l, range, target, frame, prior, log_scales[id].exp(), rng,
            );
            let a = if acc { 1.0 } else { 0.0 };
            log_scales[id] += gain * (a - config.gibbs.target_acceptance);
        }
    }
    let scales: Vec<f64> = log_scales.iter().map(|s| s.exp()).collect();

    let thin = config.thin.unwrap_or_else(|| default_thin(config.iterations)).max(1);
    let mut states = Vec::with_capacity(config.iterations / thin);
    let mut accepted = Vec::with_capacity(config.iterations);
    let (mut moves, mut moves_accepted) = (0usize, 0usize);
    for j in 0..config.iterations {
        let mut static_accepted = false;
        for (id, target, l, range) in scan.moves() {
            let acc = gibbs_block_step(&mut state, l, range, target, frame, prior, scales[id], rng);
            if id == 0 {
                static_accepted = acc;
            }
            moves += 1;
            moves_accepted += usize::from(acc);
        }
        accepted.push(static_accepted);
        if (j + 1) % thin == 0 {
            state.log_marginal_likelihood = observation_log_likelihood(&state.path, frame);
            state.log_prior = log_static_prior(&state.params, prior);
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
        filter_failures: 0,
        block_acceptance_rate: Some(moves_accepted as f64 / moves.max(1) as f64),
    })
}
