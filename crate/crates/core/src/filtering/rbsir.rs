use alloc::vec::Vec;

use rand::Rng;

use super::particles::{ParticleSystem, DEFAULT_ESS_THRESHOLD};
use crate::model::{ComplexGrid, Frame, LatentPath, StaticParams};
use crate::rng::complex_normal;
use crate::{ComplexSample, Error, Result};

/// One path-space proposal and its evidence estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub path: LatentPath,
    /// `sum_l sum_t log(sum_i W_{t-1}^i p(y_t | i))`, the log of an unbiased
    /// estimate of `p(y_{1:T} | alpha, beta)`.
    pub log_marginal_likelihood: f64,
    /// Per-relay log evidence; they add to `log_marginal_likelihood`.
    pub relay_log_likelihoods: Vec<f64>,
    /// Per-relay ESS after weighting at each step.
    pub ess_trace: Vec<Vec<f64>>,
    pub resample_count: usize,
    /// Per-relay index of the final-step particle whose lineage was returned.
    pub lineage_ends: Vec<usize>,
}

/// Known latent values that replace the particle draws ("genie-aided"
/// filtering). `None` leaves that component to the filter.
#[derive(Debug, Clone, Default)]
pub struct Genie {
    pub h: Option<ComplexGrid>,
    pub w: Option<ComplexGrid>,
}

/// Rao-Blackwellised SIR filter with reusable buffers.
#[derive(Debug, Clone)]
pub struct RbsirFilter {
    n_particles: usize,
    ess_threshold: f64,
    system: ParticleSystem,
}

impl RbsirFilter {
    pub fn new(n_particles: usize) -> Result<Self> {
        Self::with_threshold(n_particles, DEFAULT_ESS_THRESHOLD)
    }

    pub fn with_threshold(n_particles: usize, ess_threshold: f64) -> Result<Self> {
        if n_particles < 2 {
            return Err(Error::InvalidConfig("the filter needs at least 2 particles"));
        }
        if !(ess_threshold > 0.0 && ess_threshold <= 1.0) {
            return Err(Error::InvalidConfig("ESS threshold fraction must lie in (0, 1]"));
        }
        Ok(Self { n_particles, ess_threshold, system: ParticleSystem::new(n_particles) })
    }

    /// Particle population of the last relay processed by the latest run.
    pub fn system(&self) -> &ParticleSystem {
        &self.system
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn run<R: Rng + ?Sized>(
        &mut self,
        frame: &Frame,
        params: &StaticParams,
        rng: &mut R,
    ) -> Result<FilterOutput> {
        self.run_inner(frame, params, None, rng)
    }

    pub fn run_with_genie<R: Rng + ?Sized>(
        &mut self,
        frame: &Frame,
        params: &StaticParams,
        genie: &Genie,
        rng: &mut R,
    ) -> Result<FilterOutput> {
        for grid in [&genie.h, &genie.w].into_iter().flatten() {
            if grid.relays() != frame.relays() || grid.len() != frame.t() {
                return Err(Error::ShapeMismatch {
                    expected: frame.relays() * frame.t(),
                    got: grid.as_slice().len(),
                });
            }
        }
        self.run_inner(frame, params, Some(genie), rng)
    }

    fn run_inner<R: Rng + ?Sized>(
        &mut self,
        frame: &Frame,
        params: &StaticParams,
        genie: Option<&Genie>,
        rng: &mut R,
    ) -> Result<FilterOutput> {
        params.ensure_stationary()?;
        if params.relays() != frame.relays() {
            return Err(Error::ShapeMismatch { expected: frame.relays(), got: params.relays() });
        }
        let (relays, t_len) = (frame.relays(), frame.t());
        let noise = &frame.noise;
        let mut path = LatentPath::zeros(relays, t_len);
        let mut relay_ll = Vec::with_capacity(relays);
        let mut ess_trace = Vec::with_capacity(relays);
        let mut resample_count = 0;
        let mut lineage_ends = Vec::with_capacity(relays);
        let sys = &mut self.system;

        for l in 0..relays {
            let (alpha, beta) = params.relay(l);
            let y = frame.y.row(l);
            let pin = |t: usize| {
                genie.map_or((None, None), |gn| {
                    (gn.h.as_ref().map(|g| g.get(l, t)), gn.w.as_ref().map(|g| g.get(l, t)))
                })
            };
            let mut ll = 0.0;
            for t in 0..t_len {
                if t == 0 {
                    sys.initialize(noise, rng);
                } else {
                    sys.propagate(alpha, beta, noise, rng);
                }
                let (ph, pw) = pin(t);
                sys.pin(ph, pw);
                ll += sys
                    .weight_and_normalize(y[t], frame.config.pilots[t], &frame.relay, noise.sigma2_v)
                    .map_err(|e| match e {
                        Error::DegenerateFilter { .. } => Error::DegenerateFilter { t },
                        other => other,
                    })?;
                if t + 1 < t_len {
                    sys.maybe_resample(self.ess_threshold, rng)?;
                }
            }
            let end = sys.sample_index(rng);
            lineage_ends.push(end);
            let lineage = sys.lineage(end);
            for (t, p) in lineage.iter().enumerate() {
                path.h.set(l, t, p.h);
                path.w.set(l, t, p.w);
            }
            backward_sample_g(&lineage, beta, noise.sigma2_g, path.g.row_mut(l), rng);
            relay_ll.push(ll);
            ess_trace.push(sys.ess_trace().to_vec());
            resample_count += sys.resample_count();
        }

        Ok(FilterOutput {
            path,
            log_marginal_likelihood: relay_ll.iter().sum(),
            relay_log_likelihoods: relay_ll,
            ess_trace,
            resample_count,
            lineage_ends,
        })
    }
}

/// Backward simulation of `g_{1:T}` from the filtered moments stored along
/// one lineage.
fn backward_sample_g<R: Rng + ?Sized>(
    lineage: &[super::Particle],
    beta: f64,
    sigma2_g: f64,
    out: &mut [ComplexSample],
    rng: &mut R,
) {
    let last = lineage.len() - 1;
    let k = lineage[last].kalman;
    out[last] = k.mu + complex_normal(rng, k.sigma);
    let q = (1.0 - beta * beta) * sigma2_g;
    for t in (0..last).rev() {
        let k = lineage[t].kalman;
        let pred_var = beta * beta * k.sigma + q;
        let gain = k.sigma * beta / pred_var;
        let mean = k.mu + (out[t + 1] - k.mu.scale(beta)).scale(gain);
        let var = (k.sigma * q / pred_var).max(0.0);
        out[t] = mean + complex_normal(rng, var);
    }
}

/// One-shot filter run with `n_particles` and the default resampling
/// threshold.
pub fn run_rbsir<R: Rng + ?Sized>(
    frame: &Frame,
    params: &StaticParams,
    n_particles: usize,
    rng: &mut R,
) -> Result<FilterOutput> {
    RbsirFilter::new(n_particles)?.run(frame, params, rng)
}
