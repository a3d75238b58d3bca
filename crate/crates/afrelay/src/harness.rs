//! Sweeps over `(N, T, SNR)` grids, per-point metrics and the scaling
//! benchmark.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use afrelay_core::bcrlb::marginalized_bcrlb;
use afrelay_core::estimate::{mse_against_truth, scalar_summary, summarize_chain};
use afrelay_core::filtering::RbsirFilter;
use afrelay_core::model::{
    simulate_frame, Frame, FrameConfig, LatentPath, NoiseConfig, PriorConfig, RelayFunction,
    StaticParams,
};
use afrelay_core::rng::{mix_seed, substream};
use afrelay_core::samplers::{
    gibbs_initial_state, initial_state, matched_gibbs_iterations, pmcmc_step, run_gibbs_observed,
    run_pmcmc_observed, AdaptiveConfig, AdaptiveState, ChainState, ChainTrace, GibbsConfig,
    GibbsRunConfig, PmcmcConfig, RbpfEstimator,
};
use afrelay_core::ComplexSample;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, RelayChoice, SamplerKind};
use crate::error::{AppError, AppResult};

/// The configuration a sweep runs from.
pub type ExperimentConfig = Config;

const FRAME_STREAM: u64 = 1;
const CHAIN_STREAM: u64 = 2;
const BENCH_STREAM: u64 = 3;

/// Credible level of the `ci90_alpha_*` metrics columns.
pub const ALPHA_CI_LEVEL: f64 = 0.9;

/// One grid point and frame replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointId {
    pub n: usize,
    pub t: usize,
    pub snr_db: f64,
    pub frame: usize,
    pub sampler: SamplerKind,
}

impl PointId {
    /// File-name friendly label, e.g. `n100_t100_snr15_f3_adpmcmc`.
    pub fn label(&self) -> String {
        format!(
            "n{}_t{}_snr{}_f{}_{}",
            self.n,
            self.t,
            self.snr_db,
            self.frame,
            self.sampler.name()
        )
    }

    /// Frames depend only on `(T, SNR, frame)`, so every `N` and both
    /// samplers see the same data.
    pub fn frame_seed(&self, master: u64) -> u64 {
        mix_seed(master, &[FRAME_STREAM, self.t as u64, self.snr_db.to_bits(), self.frame as u64])
    }

    pub fn chain_seed(&self, master: u64) -> u64 {
        mix_seed(
            master,
            &[
                CHAIN_STREAM,
                self.n as u64,
                self.t as u64,
                self.snr_db.to_bits(),
                self.frame as u64,
                self.sampler.code(),
            ],
        )
    }
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub id: PointId,
    pub seed: u64,
    pub iterations: usize,
    pub acceptance_rate: f64,
    pub mse_h: f64,
    pub mse_g: f64,
    pub mse_total: f64,
    /// Error of the posterior mean of the cascade `h g`.
    pub mse_hg: f64,
    /// Averaged over relays when `L > 1`.
    pub mmse_alpha: f64,
    pub mmse_beta: f64,
    pub ci90_alpha: (f64, f64),
    pub bcrlb_mean: f64,
    /// Empty unless the point failed.
    pub error: String,
}

impl MetricsRecord {
    fn failed(id: PointId, seed: u64, message: String) -> Self {
        Self {
            id,
            seed,
            iterations: 0,
            acceptance_rate: f64::NAN,
            mse_h: f64::NAN,
            mse_g: f64::NAN,
            mse_total: f64::NAN,
            mse_hg: f64::NAN,
            mmse_alpha: f64::NAN,
            mmse_beta: f64::NAN,
            ci90_alpha: (f64::NAN, f64::NAN),
            bcrlb_mean: f64::NAN,
            error: message,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }
}

/// Recorded parameter draw for `traces/<point>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub params: StaticParams,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub record: MetricsRecord,
    pub trace: Vec<TraceRow>,
    pub wall_clock_s: f64,
}

pub fn prior(cfg: &Config) -> PriorConfig {
    PriorConfig { a: cfg.prior_a, b: cfg.prior_b, c: cfg.prior_c, d: cfg.prior_d }
}

pub fn relay_function(cfg: &Config, noise: &NoiseConfig, frame: &FrameConfig) -> RelayFunction {
    match cfg.relay {
        RelayChoice::Af => RelayFunction::power_normalized(noise, frame.pilot_energy()),
        RelayChoice::Identity => RelayFunction::Identity,
    }
}

pub fn pmcmc_config(cfg: &Config) -> PmcmcConfig {
    PmcmcConfig {
        iterations: cfg.iterations,
        burnin: cfg.burnin,
        thin: cfg.thin,
        prior: prior(cfg),
        adaptive: AdaptiveConfig { w1: cfg.w1, warmup: cfg.warmup },
    }
}

/// Gibbs run with the operation count of the configured PMCMC chain; the
/// burn-in keeps the same fraction of the chain.
pub fn gibbs_run_config(cfg: &Config, n: usize, t: usize) -> GibbsRunConfig {
    let iterations =
        matched_gibbs_iterations(cfg.iterations, n, t, cfg.relays, cfg.gibbs_multiplier).max(2);
    let burnin = ((iterations as f64) * cfg.burnin as f64 / cfg.iterations as f64) as usize;
    GibbsRunConfig {
        gibbs: GibbsConfig { block_length: cfg.gibbs_block, ..GibbsConfig::default() },
        iterations,
        burnin: burnin.min(iterations - 1),
        thin: cfg.thin,
        prior: prior(cfg),
    }
}

/// Simulates the frame of `(T, SNR, frame)` from the configured truth.
pub fn simulate(cfg: &Config, t: usize, snr_db: f64, seed: u64) -> AppResult<Frame> {
    let noise = NoiseConfig::from_snr_db(snr_db);
    let frame_cfg = FrameConfig::new(t, cfg.relays, snr_db)?;
    let relay = relay_function(cfg, &noise, &frame_cfg);
    let params = StaticParams::uniform(cfg.relays, cfg.alpha, cfg.beta)?;
    Ok(simulate_frame(&params, &frame_cfg, &noise, &relay, &mut substream(seed, &[]))?)
}

/// Runs one chain on `frame`, reporting completed iterations.
pub fn run_chain(
    cfg: &Config,
    frame: &Frame,
    sampler: SamplerKind,
    n: usize,
    seed: u64,
    on_iteration: &mut dyn FnMut(usize, usize),
) -> AppResult<ChainTrace> {
    let mut rng = substream(seed, &[]);
    match sampler {
        SamplerKind::Adpmcmc => {
            let config = pmcmc_config(cfg);
            let filter = RbsirFilter::with_threshold(n, cfg.ess_threshold)?;
            let mut est = RbpfEstimator::new(frame, filter);
            let init = initial_state(&mut est, &config.prior, frame.relays(), &mut rng)?;
            let total = config.iterations;
            Ok(run_pmcmc_observed(&mut est, init, &config, &mut rng, &mut |j| on_iteration(j, total))?)
        }
        SamplerKind::Gibbs => {
            let config = gibbs_run_config(cfg, n, frame.t());
            let init = gibbs_initial_state(frame, &config.prior, &mut rng)?;
            let total = config.iterations;
            Ok(run_gibbs_observed(frame, &config, init, &mut rng, &mut |j| on_iteration(j, total))?)
        }
    }
}

fn cascade_mse(states: &[ChainState], truth: &LatentPath) -> f64 {
    let cells = truth.h.as_slice().len();
    let mut mean = vec![ComplexSample::ZERO; cells];
    for s in states {
        for (k, m) in mean.iter_mut().enumerate() {
            *m += s.path.h.as_slice()[k] * s.path.g.as_slice()[k];
        }
    }
    let inv = 1.0 / states.len() as f64;
    mean.iter()
        .enumerate()
        .map(|(k, m)| (m.scale(inv) - truth.h.as_slice()[k] * truth.g.as_slice()[k]).norm_sqr())
        .sum::<f64>()
        / cells as f64
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Metrics of a finished chain against the frame's ground truth.
pub fn chain_metrics(
    cfg: &Config,
    id: PointId,
    seed: u64,
    frame: &Frame,
    trace: &ChainTrace,
) -> AppResult<MetricsRecord> {
    let truth = frame.truth.as_ref().ok_or_else(|| AppError::Point {
        point: id.label(),
        message: "frame carries no ground truth".into(),
    })?;
    let summary = summarize_chain(trace, trace.burnin, cfg.ci_level)?;
    let mse = mse_against_truth(&summary.mmse_path, &truth.path)?;
    let post = trace.post_burnin();
    let mut alpha: Vec<f64> = post.iter().map(|s| mean(&s.params.alpha)).collect();
    let (_, lo, hi) = scalar_summary(&mut alpha, ALPHA_CI_LEVEL);
    let draws: Vec<StaticParams> = post.iter().map(|s| s.params.clone()).collect();
    let s = ComplexSample::new(frame.config.pilot_energy().sqrt(), 0.0);
    let bound = marginalized_bcrlb(&draws, &frame.noise, s, frame.t())?;
    Ok(MetricsRecord {
        id,
        seed,
        iterations: trace.accepted.len(),
        acceptance_rate: trace.acceptance_rate,
        mse_h: mse.h,
        mse_g: mse.g,
        mse_total: mse.total,
        mse_hg: cascade_mse(post, &truth.path),
        mmse_alpha: mean(&summary.mmse_params.alpha),
        mmse_beta: mean(&summary.mmse_params.beta),
        ci90_alpha: (lo, hi),
        bcrlb_mean: bound.mean,
        error: String::new(),
    })
}

pub fn trace_rows(trace: &ChainTrace) -> Vec<TraceRow> {
    trace
        .states
        .iter()
        .enumerate()
        .map(|(k, s)| TraceRow {
            iteration: (k + 1) * trace.thin,
            params: s.params.clone(),
            log_likelihood: s.log_marginal_likelihood,
        })
        .collect()
}

/// Simulates the point's frame, runs its chain and scores it. Failures are
/// returned in-band.
pub fn run_point(cfg: &Config, id: PointId) -> PointOutcome {
    let seed = id.chain_seed(cfg.seed);
    let start = Instant::now();
    let result = simulate(cfg, id.t, id.snr_db, id.frame_seed(cfg.seed)).and_then(|frame| {
        let trace = run_chain(cfg, &frame, id.sampler, id.n, seed, &mut |_, _| {})?;
        let record = chain_metrics(cfg, id, seed, &frame, &trace)?;
        Ok((record, trace_rows(&trace)))
    });
    let wall_clock_s = start.elapsed().as_secs_f64();
    match result {
        Ok((record, trace)) => PointOutcome { record, trace, wall_clock_s },
        Err(e) => PointOutcome {
            record: MetricsRecord::failed(id, seed, e.to_string()),
            trace: Vec::new(),
            wall_clock_s,
        },
    }
}

/// Grid points in emission order: `N`, then `T`, SNR, frame, sampler.
pub fn sweep_points(cfg: &Config) -> Vec<PointId> {
    let mut out = Vec::new();
    for &n in &cfg.n_particles {
        for &t in &cfg.t {
            for &snr_db in &cfg.snr_db {
                for frame in 0..cfg.frames {
                    for &sampler in cfg.sampler.samplers() {
                        out.push(PointId { n, t, snr_db, frame, sampler });
                    }
                }
            }
        }
    }
    out
}

/// Runs every point on the rayon pool. Output order is [`sweep_points`]
/// order regardless of scheduling. `progress(done, total)` is called as
/// points finish.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Vec<PointOutcome> {
    let points = sweep_points(cfg);
    let total = points.len();
    let done = AtomicUsize::new(0);
    points
        .par_iter()
        .map(|&id| {
            let out = run_point(cfg, id);
            progress(done.fetch_add(1, Ordering::SeqCst) + 1, total);
            out
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    /// `"n"` or `"t"`: the swept dimension.
    pub axis: &'static str,
    pub n: usize,
    pub t: usize,
    pub relays: usize,
    pub filter_runs: usize,
    pub seconds_per_iteration: f64,
    pub model_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Log-log slope of time per iteration against `N`.
    pub exponent_n: f64,
    /// Log-log slope of time per iteration against `T`.
    pub exponent_t: f64,
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

const BENCH_REPEATS: usize = 3;

/// Seconds per filter-running PMCMC iteration, best of a few repeats.
fn time_iterations(cfg: &Config, n: usize, t: usize) -> AppResult<(f64, usize)> {
    let snr = cfg.snr_db[0];
    let frame = simulate(cfg, t, snr, mix_seed(cfg.seed, &[BENCH_STREAM, t as u64]))?;
    let config = pmcmc_config(cfg);
    let mut best = f64::INFINITY;
    let mut runs_at_best = 0;
    for rep in 0..BENCH_REPEATS {
        let mut rng = substream(cfg.seed, &[BENCH_STREAM, n as u64, t as u64, rep as u64]);
        let filter = RbsirFilter::with_threshold(n, cfg.ess_threshold)?;
        let mut est = RbpfEstimator::new(&frame, filter);
        let mut state = initial_state(&mut est, &config.prior, frame.relays(), &mut rng)?;
        let mut adapt = AdaptiveState::new(2 * frame.relays(), config.adaptive);
        adapt.update(&state.params);
        let mut runs = 0;
        let start = Instant::now();
        for _ in 0..cfg.bench_iterations {
            let r = pmcmc_step(&mut state, &mut adapt, &mut est, &config.prior, &mut rng);
            runs += usize::from(r.filter_ran);
        }
        let per = start.elapsed().as_secs_f64() / runs.max(1) as f64;
        if per < best {
            best = per;
            runs_at_best = runs;
        }
    }
    Ok((best, runs_at_best))
}

/// Wall-clock cost per PMCMC iteration over the `bench-n` grid (at the
/// first `T`) and the `bench-t` grid (at the first `N`).
pub fn benchmark_cost(cfg: &ExperimentConfig) -> AppResult<BenchReport> {
    let (n0, t0) = (cfg.n_particles[0], cfg.t[0]);
    let mut rows = Vec::new();
    let axes = [
        ("n", cfg.bench_n.iter().map(|&n| (n, t0)).collect::<Vec<_>>()),
        ("t", cfg.bench_t.iter().map(|&t| (n0, t)).collect()),
    ];
    for (axis, grid) in axes {
        for (n, t) in grid {
            let (seconds, runs) = time_iterations(cfg, n, t)?;
            rows.push(BenchRow {
                axis,
                n,
                t,
                relays: cfg.relays,
                filter_runs: runs,
                seconds_per_iteration: seconds,
                model_cost: afrelay_core::samplers::pmcmc_iteration_cost(n, t, cfg.relays),
            });
        }
    }
    let slope = |axis: &str, pick: fn(&BenchRow) -> usize| {
        let sel: Vec<&BenchRow> = rows.iter().filter(|r| r.axis == axis).collect();
        let x: Vec<f64> = sel.iter().map(|r| pick(r) as f64).collect();
        let y: Vec<f64> = sel.iter().map(|r| r.seconds_per_iteration).collect();
        if x.len() < 2 {
            f64::NAN
        } else {
            log_log_slope(&x, &y)
        }
    };
    let exponent_n = slope("n", |r| r.n);
    let exponent_t = slope("t", |r| r.t);
    Ok(BenchReport { rows, exponent_n, exponent_t })
}
