use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::kalman::KalmanStat;
use super::resample::stratified_resample_into;
use crate::math::logsumexp;
use crate::model::{jakes_step, NoiseConfig, RelayFunction};
use crate::rng::complex_normal;
use crate::{ComplexSample, Error, Result};

/// Resample when the effective sample size falls strictly below this
/// fraction of `N`.
pub const DEFAULT_ESS_THRESHOLD: f64 = 0.8;

/// One weighted hypothesis about `(h_t, w_t)` of a single relay, with the
/// Kalman moments of `g_t` conditional on its ancestry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub h: ComplexSample,
    pub w: ComplexSample,
    pub kalman: KalmanStat,
    /// Index of the parent particle at the previous time step.
    pub ancestor: u32,
}

/// Particle population for one relay with the full per-step history needed
/// to trace a lineage back from the final time.
///
/// Lifecycle per step: [`initialize`](Self::initialize) or
/// [`propagate`](Self::propagate), then
/// [`weight_and_normalize`](Self::weight_and_normalize), then
/// [`maybe_resample`](Self::maybe_resample).
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    particles: Vec<Particle>,
    /// Weighted (pre-resampling) populations, `t`-major.
    history: Vec<Particle>,
    log_weights: Vec<f64>,
    ess: f64,
    incremental_log_likelihoods: Vec<f64>,
    ess_trace: Vec<f64>,
    resample_count: usize,
    scratch_weights: Vec<f64>,
    scratch_index: Vec<usize>,
    scratch_particles: Vec<Particle>,
}

impl ParticleSystem {
    pub fn new(n: usize) -> Self {
        let placeholder = Particle {
            h: ComplexSample::ZERO,
            w: ComplexSample::ZERO,
            kalman: KalmanStat::prior(1.0),
            ancestor: 0,
        };
        Self {
            particles: vec![placeholder; n],
            history: Vec::new(),
            log_weights: vec![-(n as f64).ln(); n],
            ess: n as f64,
            incremental_log_likelihoods: Vec::new(),
            ess_trace: Vec::new(),
            resample_count: 0,
            scratch_weights: Vec::with_capacity(n),
            scratch_index: Vec::with_capacity(n),
            scratch_particles: Vec::with_capacity(n),
        }
    }

    /// Builds a system from explicit particles with uniform weights.
    pub fn from_particles(particles: Vec<Particle>) -> Self {
        let mut sys = Self::new(particles.len());
        sys.particles = particles;
        sys
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    /// Normalized log weights.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn set_log_weights(&mut self, log_weights: &[f64]) {
        self.log_weights.copy_from_slice(log_weights);
        let lse = logsumexp(&self.log_weights);
        self.log_weights.iter_mut().for_each(|x| *x -= lse);
        self.ess = self.compute_ess();
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    pub fn incremental_log_likelihoods(&self) -> &[f64] {
        &self.incremental_log_likelihoods
    }

    pub fn ess_trace(&self) -> &[f64] {
        &self.ess_trace
    }

    pub fn resample_count(&self) -> usize {
        self.resample_count
    }

    /// Number of weighted steps stored so far.
    pub fn steps(&self) -> usize {
        self.incremental_log_likelihoods.len()
    }

    /// Stored particle `i` of step `t`.
    pub fn stored(&self, t: usize, i: usize) -> &Particle {
        &self.history[t * self.len() + i]
    }

    /// Clears history and draws the time-1 population from the stationary
    /// priors, with Kalman moments `(0, sigma2_g)`.
    pub fn initialize<R: Rng + ?Sized>(&mut self, noise: &NoiseConfig, rng: &mut R) {
        let n = self.len();
        self.history.clear();
        self.incremental_log_likelihoods.clear();
        self.ess_trace.clear();
        self.resample_count = 0;
        for (i, p) in self.particles.iter_mut().enumerate() {
            p.h = complex_normal(rng, noise.sigma2_h);
            p.w = complex_normal(rng, noise.sigma2_w);
            p.kalman = KalmanStat::prior(noise.sigma2_g);
            p.ancestor = i as u32;
        }
        self.log_weights.fill(-(n as f64).ln());
        self.ess = n as f64;
    }

    /// Bootstrap move: `h` through the AR(1) transition with `alpha`, `w`
    /// redrawn from its prior, Kalman prediction of `g` with `beta`.
    pub fn propagate<R: Rng + ?Sized>(
        &mut self,
        alpha: f64,
        beta: f64,
        noise: &NoiseConfig,
        rng: &mut R,
    ) {
        let sd_h = noise.sigma2_h.sqrt();
        for p in &mut self.particles {
            p.h = jakes_step(p.h, alpha, complex_normal(rng, 1.0).scale(sd_h));
            p.w = complex_normal(rng, noise.sigma2_w);
            p.kalman = p.kalman.predict(beta, noise.sigma2_g);
        }
    }

    /// Overwrites every particle's `h` and/or `w` with known values.
    pub fn pin(&mut self, h: Option<ComplexSample>, w: Option<ComplexSample>) {
        for p in &mut self.particles {
            if let Some(h) = h {
                p.h = h;
            }
            if let Some(w) = w {
                p.w = w;
            }
        }
    }

    /// Rao-Blackwellised weighting: each particle's incremental weight is the
    /// Kalman predictive likelihood of `y` with `g` integrated out. Updates the
    /// Kalman moments, normalizes, records the step's evidence factor and the
    /// ESS, and stores the weighted population. Returns the log evidence
    /// factor `log sum_i W_{t-1}^i p(y_t | particle i)`.
    pub fn weight_and_normalize(
        &mut self,
        y: ComplexSample,
        s: ComplexSample,
        f: &RelayFunction,
        sigma2_v: f64,
    ) -> Result<f64> {
        let t = self.steps();
        for (p, lw) in self.particles.iter_mut().zip(self.log_weights.iter_mut()) {
            let c = f.apply(s * p.h + p.w);
            let (post, ll) = p.kalman.update(y, c, sigma2_v)?;
            p.kalman = post;
            *lw += ll;
        }
        let lse = logsumexp(&self.log_weights);
        if !lse.is_finite() {
            return Err(Error::DegenerateFilter { t });
        }
        self.log_weights.iter_mut().for_each(|x| *x -= lse);
        self.ess = self.compute_ess();
        self.incremental_log_likelihoods.push(lse);
        self.ess_trace.push(self.ess);
        self.history.extend_from_slice(&self.particles);
        Ok(lse)
    }

    /// Stratified resampling when `ESS < threshold_fraction * N`. Returns
    /// whether resampling happened. Ancestor indices of the surviving
    /// particles point into the stored population of the current step.
    pub fn maybe_resample<R: Rng + ?Sized>(
        &mut self,
        threshold_fraction: f64,
        rng: &mut R,
    ) -> Result<bool> {
        let n = self.len();
        if !(self.ess < threshold_fraction * n as f64) {
            for (i, p) in self.particles.iter_mut().enumerate() {
                p.ancestor = i as u32;
            }
            return Ok(false);
        }
        self.scratch_weights.clear();
        self.scratch_weights.extend(self.log_weights.iter().map(|lw| lw.exp()));
        stratified_resample_into(&self.scratch_weights, rng, &mut self.scratch_index)?;
        self.scratch_particles.clear();
        for &a in &self.scratch_index {
            let mut p = self.particles[a];
            p.ancestor = a as u32;
            self.scratch_particles.push(p);
        }
        core::mem::swap(&mut self.particles, &mut self.scratch_particles);
        self.log_weights.fill(-(n as f64).ln());
        self.ess = n as f64;
        self.resample_count += 1;
        Ok(true)
    }

    /// Index drawn proportionally to the current normalized weights.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, lw) in self.log_weights.iter().enumerate() {
            acc += lw.exp();
            if u < acc {
                return i;
            }
        }
        self.len() - 1
    }

    /// Stored particles along the lineage ending at index `last` of the
    /// final stored step, in time order.
    pub fn lineage(&self, last: usize) -> Vec<Particle> {
        let steps = self.steps();
        let mut out = vec![self.history[0]; steps];
        let mut k = last;
        for t in (0..steps).rev() {
            let p = *self.stored(t, k);
            out[t] = p;
            k = p.ancestor as usize;
        }
        out
    }

    fn compute_ess(&self) -> f64 {
        let sum_sq: f64 = self.log_weights.iter().map(|lw| (2.0 * lw).exp()).sum();
        (1.0 / sum_sq).clamp(1.0, self.len() as f64)
    }
}
