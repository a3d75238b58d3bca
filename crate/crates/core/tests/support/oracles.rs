//! Reference computations written independently of the crate's own numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

use afrelay_core::filtering::FilterOutput;
use afrelay_core::model::{ComplexGrid, Frame, LatentPath, StaticParams};
use afrelay_core::samplers::PathEstimator;
use afrelay_core::ComplexSample;
use rand::Rng;

/// Lanczos approximation (g = 7, 9 terms) of ln Gamma for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn ln_beta_density(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

/// Circular complex normal density as the product of two real normals with
/// variance `var / 2`.
pub fn cn_density_real_pair(x: (f64, f64), mean: (f64, f64), var: f64) -> f64 {
    let half = var / 2.0;
    let n = |d: f64| (-d * d / (2.0 * half)).exp() / (2.0 * PI * half).sqrt();
    n(x.0 - mean.0) * n(x.1 - mean.1)
}

/// Posterior mean and `E|g - mean|^2` of `g ~ CN(mu, sigma)` given
/// `y = c g + v`, by brute-force integration on the square `[-5, 5]^2`.
pub fn grid_posterior(
    mu: (f64, f64),
    sigma: f64,
    c: (f64, f64),
    y: (f64, f64),
    sigma2_v: f64,
    step: f64,
) -> ((f64, f64), f64) {
    let n = (10.0 / step).round() as usize + 1;
    let at = |i: usize| -5.0 + i as f64 * step;
    let mut mass = 0.0;
    let (mut m_re, mut m_im) = (0.0, 0.0);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (gr, gi) = (at(i), at(j));
            let prior = cn_density_real_pair((gr, gi), mu, sigma);
            let mean = (c.0 * gr - c.1 * gi, c.0 * gi + c.1 * gr);
            let w = prior * cn_density_real_pair(y, mean, sigma2_v);
            weights.push(w);
            mass += w;
            m_re += w * gr;
            m_im += w * gi;
        }
    }
    let (m_re, m_im) = (m_re / mass, m_im / mass);
    let mut var = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (dr, di) = (at(i) - m_re, at(j) - m_im);
            var += weights[i * n + j] * (dr * dr + di * di);
        }
    }
    ((m_re, m_im), var / mass)
}

fn mul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// Exact log evidence of `y_t = c_t g_t + v_t` with `g` a stationary AR(1)
/// of coefficient `beta` and variance `sigma2_g`, by a textbook Kalman
/// filter on real and imaginary parts.
pub fn kalman_log_evidence(
    y: &[(f64, f64)],
    c: &[(f64, f64)],
    beta: f64,
    sigma2_g: f64,
    sigma2_v: f64,
) -> f64 {
    let (mut m, mut p) = ((0.0, 0.0), sigma2_g);
    let mut ll = 0.0;
    for t in 0..y.len() {
        if t > 0 {
            m = (beta * m.0, beta * m.1);
            p = beta * beta * p + (1.0 - beta * beta) * sigma2_g;
        }
        let ct = c[t];
        let pred = mul(ct, m);
        let s = (ct.0 * ct.0 + ct.1 * ct.1) * p + sigma2_v;
        let r = (y[t].0 - pred.0, y[t].1 - pred.1);
        ll += -(PI * s).ln() - (r.0 * r.0 + r.1 * r.1) / s;
        let k = ((ct.0 * p / s), (-ct.1 * p / s));
        let upd = mul(k, r);
        m = (m.0 + upd.0, m.1 + upd.1);
        p *= sigma2_v / s;
    }
    ll
}

/// Physicists' Gauss-Hermite nodes and weights by Newton iteration on the
/// Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.855_75 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PI.powf(-0.25), 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j + 1) as f64).sqrt() * p2 - (j as f64 / (j + 1) as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Test-only estimator for the exactly solvable submodel `y = g + v`
/// (`h = 1`, `w = 0` known, unit pilots, identity relay). Its evidence is
/// the exact Kalman evidence and its path leaves `g` at zero.
pub struct ExactEvidence {
    pub y: Vec<(f64, f64)>,
    pub sigma2_v: f64,
    pub calls: usize,
}

impl ExactEvidence {
    pub fn new(frame: &Frame) -> Self {
        let y = frame.y.row(0).iter().map(|z| (z.re, z.im)).collect();
        Self { y, sigma2_v: frame.noise.sigma2_v, calls: 0 }
    }

    pub fn log_evidence(&self, beta: f64) -> f64 {
        let c = vec![(1.0, 0.0); self.y.len()];
        kalman_log_evidence(&self.y, &c, beta, 1.0, self.sigma2_v)
    }
}

impl PathEstimator for ExactEvidence {
    fn estimate<R: Rng + ?Sized>(
        &mut self,
        params: &StaticParams,
        _rng: &mut R,
    ) -> afrelay_core::Result<FilterOutput> {
        self.calls += 1;
        let t = self.y.len();
        let mut path = LatentPath::zeros(1, t);
        path.h = ComplexGrid::from_rows(vec![vec![ComplexSample::ONE; t]]).unwrap();
        let ll = self.log_evidence(params.beta[0]);
        Ok(FilterOutput {
            path,
            log_marginal_likelihood: ll,
            relay_log_likelihoods: vec![ll],
            ess_trace: vec![vec![]],
            resample_count: 0,
            lineage_ends: vec![0],
        })
    }
}

/// Normalised grid posterior of `beta` under a Beta(c, d) prior, on the
/// midpoints of `cells` equal cells of (0, 1).
pub fn grid_beta_posterior(model: &ExactEvidence, c: f64, d: f64, cells: usize) -> Vec<f64> {
    let logs: Vec<f64> = (0..cells)
        .map(|i| {
            let b = (i as f64 + 0.5) / cells as f64;
            ln_beta_density(b, c, d) + model.log_evidence(b)
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = p.iter().sum();
    p.into_iter().map(|v| v / total).collect()
}

/// Central interval of a grid posterior holding all but `tail` mass on
/// each side.
pub fn grid_interval(grid: &[f64], tail: f64) -> (f64, f64) {
    let cells = grid.len() as f64;
    let mut acc = 0.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    for (i, p) in grid.iter().enumerate() {
        let before = acc;
        acc += p;
        if before < tail && acc >= tail {
            lo = i as f64 / cells;
        }
        if before < 1.0 - tail && acc >= 1.0 - tail {
            hi = (i + 1) as f64 / cells;
        }
    }
    (lo, hi)
}

/// Total variation between chain samples and a grid posterior on (0, 1),
/// both binned into `bins` equal bins of `[lo, hi)` plus one bin for each
/// tail.
pub fn total_variation(samples: &[f64], grid: &[f64], lo: f64, hi: f64, bins: usize) -> f64 {
    let bin = |x: f64| -> usize {
        if x < lo {
            0
        } else if x >= hi {
            bins + 1
        } else {
            1 + (((x - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
        }
    };
    let mut diff = vec![0.0; bins + 2];
    for &s in samples {
        diff[bin(s)] += 1.0 / samples.len() as f64;
    }
    for (i, p) in grid.iter().enumerate() {
        diff[bin((i as f64 + 0.5) / grid.len() as f64)] -= p;
    }
    diff.iter().map(|d| d.abs()).sum::<f64>() / 2.0
}

/// `log E_w[p(y | h, w)]` for one relay with `h` known and `w_t ~ CN(0,
/// sigma2_w)` integrated out by a tensor Gauss-Hermite rule with `nodes`
/// points per real coordinate. The inner likelihood is the exact Kalman
/// evidence over `g` with `c_t = gain * (s_t h_t + w_t)`.
pub fn genie_h_log_evidence(
    y: &[(f64, f64)],
    s: &[(f64, f64)],
    h: &[(f64, f64)],
    gain: f64,
    beta: f64,
    noise: (f64, f64),
    nodes: usize,
) -> f64 {
    let (sigma2_w, sigma2_v) = noise;
    let (x, w) = gauss_hermite(nodes);
    let dims = 2 * y.len();
    let sd = sigma2_w.sqrt();
    let mut idx = vec![0usize; dims];
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        let mut c = Vec::with_capacity(y.len());
        for t in 0..y.len() {
            let (i, j) = (idx[2 * t], idx[2 * t + 1]);
            weight *= w[i] * w[j] / PI;
            let sh = mul(s[t], h[t]);
            c.push((gain * (sh.0 + sd * x[i]), gain * (sh.1 + sd * x[j])));
        }
        total += weight * kalman_log_evidence(y, &c, beta, 1.0, sigma2_v).exp();
        let mut k = 0;
        while k < dims {
            idx[k] += 1;
            if idx[k] < nodes {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == dims {
            break;
        }
    }
    total.ln()
}
