//! The generative dual-hop relay model.
//!
//! For relay `l` and symbol `n`:
//!
//! ```text
//! h[n] = alpha * h[n-1] + sqrt(1 - alpha^2) * u[n]      (source -> relay)
//! g[n] = beta  * g[n-1] + sqrt(1 - beta^2)  * o[n]      (relay -> destination)
//! r[n] = s[n] * h[n] + w[n]                             (relay input)
//! y[n] = f(r[n]) * g[n] + v[n]                          (destination)
//! ```
//!
//! with `u, o ~ CN(0, 1)`, `w ~ CN(0, sigma2_w)`, `v ~ CN(0, sigma2_v)` and
//! `CN(m, s2)` the circular complex Gaussian whose real and imaginary parts
//! are independent with variance `s2 / 2`. Relays are independent.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::math::{ln_beta_pdf, log_cn};
use crate::rng::complex_normal;
use crate::{ComplexSample, Error, Result};

/// Noise and stationary channel variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub sigma2_w: f64,
    pub sigma2_v: f64,
    pub sigma2_h: f64,
    pub sigma2_g: f64,
}

impl NoiseConfig {
    pub fn new(sigma2_w: f64, sigma2_v: f64, sigma2_h: f64, sigma2_g: f64) -> Result<Self> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !(ok(sigma2_w) && ok(sigma2_v) && ok(sigma2_h) && ok(sigma2_g)) {
            return Err(Error::InvalidConfig("noise variances must be finite and positive"));
        }
        Ok(Self { sigma2_w, sigma2_v, sigma2_h, sigma2_g })
    }

    /// Equal relay and destination noise `sigma^2 = 10^(-snr_db / 10)` with
    /// unit channel variances.
    pub fn from_snr_db(snr_db: f64) -> Self {
        let s2 = 10f64.powf(-snr_db / 10.0);
        Self { sigma2_w: s2, sigma2_v: s2, sigma2_h: 1.0, sigma2_g: 1.0 }
    }
}

/// Memoryless relay processing function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelayFunction {
    AmplifyForward { gain: f64 },
    Identity,
}

impl RelayFunction {
    /// Amplify-and-forward with the gain that normalises the relay's
    /// average transmit power to one: `A = 1 / sqrt(sigma2_h |s|^2 + sigma2_w)`.
    pub fn power_normalized(noise: &NoiseConfig, pilot_energy: f64) -> Self {
        let gain = (1.0 / (noise.sigma2_h * pilot_energy + noise.sigma2_w)).sqrt();
        Self::AmplifyForward { gain }
    }

    #[inline]
    pub fn apply(&self, r: ComplexSample) -> ComplexSample {
        match *self {
            Self::AmplifyForward { gain } => r.scale(gain),
            Self::Identity => r,
        }
    }

    pub fn gain(&self) -> f64 {
        match *self {
            Self::AmplifyForward { gain } => gain,
            Self::Identity => 1.0,
        }
    }
}

/// Per-relay AR(1) coefficients. Proposals may construct values outside the
/// unit interval through [`StaticParams::unchecked`]; the prior assigns them
/// zero density and anything that simulates or filters checks
/// [`StaticParams::ensure_stationary`] first.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl StaticParams {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let p = Self::unchecked(alpha, beta)?;
        p.ensure_stationary()?;
        Ok(p)
    }

    pub fn unchecked(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::ShapeMismatch { expected: alpha.len(), got: beta.len() });
        }
        if alpha.is_empty() {
            return Err(Error::InvalidConfig("at least one relay is required"));
        }
        Ok(Self { alpha, beta })
    }

    /// Same `(alpha, beta)` on every relay.
    pub fn uniform(relays: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(vec![alpha; relays], vec![beta; relays])
    }

    pub fn relays(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_stationary(&self) -> bool {
        self.alpha.iter().chain(&self.beta).all(|&x| x > 0.0 && x < 1.0)
    }

    pub fn ensure_stationary(&self) -> Result<()> {
        for (name, values) in [("alpha", &self.alpha), ("beta", &self.beta)] {
            if let Some(&value) = values.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
                return Err(Error::NonstationaryParameters { name, value });
            }
        }
        Ok(())
    }

    /// Flattened `[alpha_1..alpha_L, beta_1..beta_L]`.
    pub fn to_vector(&self) -> Vec<f64> {
        self.alpha.iter().chain(&self.beta).copied().collect()
    }

    pub fn from_vector(v: &[f64]) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(Error::ShapeMismatch { expected: v.len() + 1, got: v.len() });
        }
        let l = v.len() / 2;
        Self::unchecked(v[..l].to_vec(), v[l..].to_vec())
    }

    /// The single-relay view used by per-relay recursions.
    pub fn relay(&self, l: usize) -> (f64, f64) {
        (self.alpha[l], self.beta[l])
    }
}

/// Beta prior shapes: `alpha ~ Beta(a, b)`, `beta ~ Beta(c, d)` on every relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { a: 10.0, b: 0.6, c: 10.0, d: 0.6 }
    }
}

impl PriorConfig {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if [a, b, c, d].iter().all(|&x| x > 0.0 && x.is_finite()) {
            Ok(Self { a, b, c, d })
        } else {
            Err(Error::InvalidConfig("Beta prior shapes must be finite and positive"))
        }
    }
}

/// Frame layout shared by the simulator and the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameConfig {
    pub t: usize,
    pub relays: usize,
    pub pilots: Vec<ComplexSample>,
    pub snr_db: f64,
}

impl FrameConfig {
    /// Constant unit pilot `s_n = 1`.
    pub fn new(t: usize, relays: usize, snr_db: f64) -> Result<Self> {
        Self::with_pilots(relays, vec![ComplexSample::ONE; t], snr_db)
    }

    pub fn with_pilots(relays: usize, pilots: Vec<ComplexSample>, snr_db: f64) -> Result<Self> {
        if pilots.len() < 2 {
            return Err(Error::InvalidConfig("frame length must be at least 2"));
        }
        if relays == 0 {
            return Err(Error::InvalidConfig("at least one relay is required"));
        }
        if pilots.iter().any(|s| s.norm_sqr() == 0.0 || !s.is_finite()) {
            return Err(Error::InvalidConfig("pilot symbols must be finite and nonzero"));
        }
        if !snr_db.is_finite() {
            return Err(Error::InvalidConfig("SNR must be finite"));
        }
        Ok(Self { t: pilots.len(), relays, pilots, snr_db })
    }

    /// Mean pilot energy `mean |s_n|^2`.
    pub fn pilot_energy(&self) -> f64 {
        self.pilots.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.t as f64
    }
}

/// Relay-major `L x T` array of complex samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    relays: usize,
    len: usize,
    data: Vec<ComplexSample>,
}

impl ComplexGrid {
    pub fn zeros(relays: usize, len: usize) -> Self {
        Self { relays, len, data: vec![ComplexSample::ZERO; relays * len] }
    }

    pub fn from_rows(rows: Vec<Vec<ComplexSample>>) -> Result<Self> {
        let relays = rows.len();
        let len = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != len) {
            return Err(Error::ShapeMismatch { expected: len, got: bad.len() });
        }
        Ok(Self { relays, len, data: rows.into_iter().flatten().collect() })
    }

    pub fn relays(&self) -> usize {
        self.relays
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, l: usize) -> &[ComplexSample] {
        &self.data[l * self.len..(l + 1) * self.len]
    }

    pub fn row_mut(&mut self, l: usize) -> &mut [ComplexSample] {
        &mut self.data[l * self.len..(l + 1) * self.len]
    }

    pub fn get(&self, l: usize, t: usize) -> ComplexSample {
        self.data[l * self.len + t]
    }

    pub fn set(&mut self, l: usize, t: usize, v: ComplexSample) {
        self.data[l * self.len + t] = v;
    }

    pub fn as_slice(&self) -> &[ComplexSample] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [ComplexSample] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.relays == other.relays && self.len == other.len
    }
}

/// Latent trajectories of every relay.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPath {
    pub h: ComplexGrid,
    pub g: ComplexGrid,
    pub w: ComplexGrid,
}

impl LatentPath {
    pub fn zeros(relays: usize, t: usize) -> Self {
        Self {
            h: ComplexGrid::zeros(relays, t),
            g: ComplexGrid::zeros(relays, t),
            w: ComplexGrid::zeros(relays, t),
        }
    }

    pub fn relays(&self) -> usize {
        self.h.relays()
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        [&self.h, &self.g, &self.w]
            .iter()
            .all(|grid| grid.as_slice().iter().all(|z| z.is_finite()))
    }
}

/// Ground truth kept alongside simulated data.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub params: StaticParams,
    pub path: LatentPath,
}

/// Observed destination samples plus everything the receiver knows.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub y: ComplexGrid,
    pub config: FrameConfig,
    pub noise: NoiseConfig,
    pub relay: RelayFunction,
    pub truth: Option<Truth>,
}

impl Frame {
    pub fn new(
        y: ComplexGrid,
        config: FrameConfig,
        noise: NoiseConfig,
        relay: RelayFunction,
        truth: Option<Truth>,
    ) -> Result<Self> {
        if y.relays() != config.relays || y.len() != config.t {
            return Err(Error::ShapeMismatch { expected: config.relays * config.t, got: y.as_slice().len() });
        }
        if y.as_slice().iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidConfig("observations must be finite"));
        }
        Ok(Self { y, config, noise, relay, truth })
    }

    pub fn t(&self) -> usize {
        self.config.t
    }

    pub fn relays(&self) -> usize {
        self.config.relays
    }

    pub fn without_truth(mut self) -> Self {
        self.truth = None;
        self
    }
}

fn draw_beta<R: Rng + ?Sized>(dist: &Beta<f64>, rng: &mut R) -> f64 {
    loop {
        let x = dist.sample(rng);
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
}

/// Independent Beta draws for every relay's `alpha` and `beta`. Draws that
/// round to exactly 0 or 1 are redrawn.
pub fn sample_static_prior<R: Rng + ?Sized>(
    prior: &PriorConfig,
    relays: usize,
    rng: &mut R,
) -> Result<StaticParams> {
    let da = Beta::new(prior.a, prior.b).map_err(|_| Error::InvalidConfig("Beta(a, b) shapes"))?;
    let dc = Beta::new(prior.c, prior.d).map_err(|_| Error::InvalidConfig("Beta(c, d) shapes"))?;
    let mut alpha = Vec::with_capacity(relays);
    let mut beta = Vec::with_capacity(relays);
    for _ in 0..relays {
        alpha.push(draw_beta(&da, rng));
        beta.push(draw_beta(&dc, rng));
    }
    StaticParams::new(alpha, beta)
}

/// One AR(1) step `coeff * prev + sqrt(1 - coeff^2) * innovation`, which keeps
/// the stationary variance of the innovation.
#[inline]
pub fn jakes_step(prev: ComplexSample, coeff: f64, innovation: ComplexSample) -> ComplexSample {
    debug_assert!((0.0..1.0).contains(&coeff), "AR(1) coefficient {coeff} outside [0, 1)");
    prev.scale(coeff) + innovation.scale((1.0 - coeff * coeff).sqrt())
}

/// Applies the relay function; free-function form of [`RelayFunction::apply`].
#[inline]
pub fn apply_relay(f: &RelayFunction, r: ComplexSample) -> ComplexSample {
    f.apply(r)
}

/// Simulates one frame, keeping the ground truth.
pub fn simulate_frame<R: Rng + ?Sized>(
    params: &StaticParams,
    config: &FrameConfig,
    noise: &NoiseConfig,
    relay: &RelayFunction,
    rng: &mut R,
) -> Result<Frame> {
    params.ensure_stationary()?;
    if params.relays() != config.relays {
        return Err(Error::ShapeMismatch { expected: config.relays, got: params.relays() });
    }
    let (t_len, relays) = (config.t, config.relays);
    let mut path = LatentPath::zeros(relays, t_len);
    let mut y = ComplexGrid::zeros(relays, t_len);
    let (sd_h, sd_g) = (noise.sigma2_h.sqrt(), noise.sigma2_g.sqrt());
    for l in 0..relays {
        let (alpha, beta) = params.relay(l);
        let mut h = complex_normal(rng, noise.sigma2_h);
        let mut g = complex_normal(rng, noise.sigma2_g);
        for n in 0..t_len {
            if n > 0 {
                h = jakes_step(h, alpha, complex_normal(rng, 1.0).scale(sd_h));
                g = jakes_step(g, beta, complex_normal(rng, 1.0).scale(sd_g));
            }
            let w = complex_normal(rng, noise.sigma2_w);
            let v = complex_normal(rng, noise.sigma2_v);
            let r = config.pilots[n] * h + w;
            path.h.set(l, n, h);
            path.g.set(l, n, g);
            path.w.set(l, n, w);
            y.set(l, n, relay.apply(r) * g + v);
        }
    }
    Frame::new(
        y,
        config.clone(),
        *noise,
        *relay,
        Some(Truth { params: params.clone(), path }),
    )
}

/// `log CN(y; f(s h + w) g, sigma2_v)`.
pub fn log_obs_density(
    y: ComplexSample,
    h: ComplexSample,
    g: ComplexSample,
    w: ComplexSample,
    s: ComplexSample,
    f: &RelayFunction,
    sigma2_v: f64,
) -> Result<f64> {
    let finite = [y, h, g, w, s].iter().all(|z| z.is_finite());
    if !finite || !(sigma2_v > 0.0 && sigma2_v.is_finite()) {
        return Err(Error::InvalidDensityArgument);
    }
    Ok(log_cn(y, f.apply(s * h + w) * g, sigma2_v))
}

/// Sum of Beta log densities; `-inf` when any coefficient leaves (0, 1).
pub fn log_static_prior(params: &StaticParams, prior: &PriorConfig) -> f64 {
    let la: f64 = params.alpha.iter().map(|&x| ln_beta_pdf(x, prior.a, prior.b)).sum();
    let lb: f64 = params.beta.iter().map(|&x| ln_beta_pdf(x, prior.c, prior.d)).sum();
    la + lb
}
