//! Recursive Bayesian Fisher information for the per-relay state
//! `x_t = [h_t, g_t, w_t]` and the lower bound it implies on state MSE.
//!
//! The information matrix follows
//!
//! ```text
//! J_t = D22 - D21 (J_{t-1} + D11)^{-1} D12,   J_1 = diag(1/s2_h, 1/s2_g, 1/s2_w)
//! ```
//!
//! with the closed-form `D` blocks of the AR(1) relay model. The bound on the
//! MSE matrix is `J_t^{-1}`; [`bcrlb_trace`] averages its trace over the frame.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{
    mat3_add, mat3_flat, mat3_inverse, mat3_mul, mat3_sub, mat3_trace, mat3_transpose,
    symmetric_eigenvalues, Mat3, ZERO3,
};
use crate::math::quantile_sorted;
use crate::model::{NoiseConfig, StaticParams};
use crate::{ComplexSample, Error, Result};

/// Bayesian information matrix of one relay at time `t` (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimState {
    pub j: Mat3,
    pub t: usize,
}

impl FimState {
    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|k| (self.j[i][k] - self.j[k][i]).abs() <= tol))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&mat3_flat(&self.j), 3)
    }

    /// `trace(J^{-1})`, the bound on the summed MSE of `(h, g, w)`.
    pub fn trace_inverse(&self) -> Result<f64> {
        mat3_inverse(&self.j).map(|inv| mat3_trace(&inv)).ok_or(Error::SingularInformation)
    }

    pub fn trace(&self) -> f64 {
        mat3_trace(&self.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DMatrices {
    pub d11: Mat3,
    pub d12: Mat3,
    pub d21: Mat3,
    pub d22: Mat3,
}

/// Closed-form `D` blocks for one relay. The pilot enters as `|s|^2` on the
/// diagonal and through its real part in the `(h, w)` coupling.
pub fn d_matrices(alpha: f64, beta: f64, noise: &NoiseConfig, s: ComplexSample) -> Result<DMatrices> {
    for (name, value) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..1.0).contains(&value) {
            return Err(Error::NonstationaryParameters { name, value });
        }
    }
    let (qa, qb) = (1.0 - alpha * alpha, 1.0 - beta * beta);
    let (s2v, s2w) = (noise.sigma2_v, noise.sigma2_w);
    let es = s.norm_sqr();
    let mut d11 = ZERO3;
    d11[0][0] = alpha * alpha / qa;
    d11[1][1] = beta * beta / qb;
    let mut d12 = ZERO3;
    d12[0][0] = alpha / qa;
    d12[1][1] = beta / qb;
    let d22 = [
        [1.0 / qa + es / s2v, 0.0, s.re / s2v],
        [0.0, 1.0 / qb + (es + s2w) / s2v, 0.0],
        [s.re / s2v, 0.0, 1.0 / s2w + 1.0],
    ];
    Ok(DMatrices { d11, d12, d21: d12, d22 })
}

/// `J_1` under the stationary priors.
pub fn fim_init(noise: &NoiseConfig) -> FimState {
    let mut j = ZERO3;
    j[0][0] = 1.0 / noise.sigma2_h;
    j[1][1] = 1.0 / noise.sigma2_g;
    j[2][2] = 1.0 / noise.sigma2_w;
    FimState { j, t: 1 }
}

/// One step of the information recursion, symmetrised.
pub fn fim_step(prev: &FimState, d: &DMatrices) -> Result<FimState> {
    let m = mat3_add(&prev.j, &d.d11);
    let inv = mat3_inverse(&m).ok_or(Error::SingularInformation)?;
    let correction = mat3_mul(&mat3_mul(&d.d21, &inv), &d.d12);
    let raw = mat3_sub(&d.d22, &correction);
    let rt = mat3_transpose(&raw);
    let mut j = ZERO3;
    for i in 0..3 {
        for k in 0..3 {
            j[i][k] = 0.5 * (raw[i][k] + rt[i][k]);
        }
    }
    Ok(FimState { j, t: prev.t + 1 })
}

/// One point of the bound curve of a single relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub t: usize,
    pub trace_inverse: f64,
    pub trace_information: f64,
}

/// `J_1 .. J_T` of one relay as `(t, trace(J_t^{-1}), trace(J_t))`.
pub fn bound_curve(
    alpha: f64,
    beta: f64,
    noise: &NoiseConfig,
    s: ComplexSample,
    t_len: usize,
) -> Result<Vec<BoundPoint>> {
    if t_len == 0 {
        return Err(Error::InvalidConfig("frame length must be positive"));
    }
    let d = d_matrices(alpha, beta, noise, s)?;
    let mut state = fim_init(noise);
    let mut out = Vec::with_capacity(t_len);
    for t in 1..=t_len {
        if t > 1 {
            state = fim_step(&state, &d)?;
        }
        out.push(BoundPoint {
            t,
            trace_inverse: state.trace_inverse()?,
            trace_information: state.trace(),
        });
    }
    Ok(out)
}

/// `(1/T) sum_t trace(J_t^{-1})`, summed over relays.
pub fn bcrlb_trace(
    params: &StaticParams,
    noise: &NoiseConfig,
    s: ComplexSample,
    t_len: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for l in 0..params.relays() {
        let (alpha, beta) = params.relay(l);
        let curve = bound_curve(alpha, beta, noise, s, t_len)?;
        total += curve.iter().map(|p| p.trace_inverse).sum::<f64>() / t_len as f64;
    }
    Ok(total)
}

/// Monte Carlo summary of the bound over posterior parameter draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSummary {
    pub mean: f64,
    pub std: f64,
    /// Minimum, lower quartile, median, upper quartile, maximum.
    pub quantiles: [f64; 5],
    pub draws: usize,
}

/// Evaluates [`bcrlb_trace`] at every draw, integrating the bound over the
/// posterior of the static parameters.
pub fn marginalized_bcrlb(
    draws: &[StaticParams],
    noise: &NoiseConfig,
    s: ComplexSample,
    t_len: usize,
) -> Result<BoundSummary> {
    if draws.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut values = draws
        .iter()
        .map(|p| bcrlb_trace(p, noise, s, t_len))
        .collect::<Result<Vec<_>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    values.sort_by(f64::total_cmp);
    let q = |p| quantile_sorted(&values, p);
    Ok(BoundSummary {
        mean,
        std: var.sqrt(),
        quantiles: [q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)],
        draws: draws.len(),
    })
}
