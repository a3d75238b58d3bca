
use crate::math::log_cn;
use crate::{ComplexSample, Error, Result};

/// Filtered (or predicted) moments of the scalar complex channel `g_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanStat {
    pub mu: ComplexSample,
    pub sigma: f64,
}

impl KalmanStat {
    /// Stationary prior `CN(0, var)`.
    pub fn prior(var: f64) -> Self {
        Self { mu: ComplexSample::ZERO, sigma: var }
    }

    /// Exact AR(1) moment propagation with stationary variance `stationary_var`.
    #[inline]
    pub fn predict(self, beta: f64, stationary_var: f64) -> Self {
        let b2 = beta * beta;
        Self { mu: self.mu.scale(beta), sigma: b2 * self.sigma + (1.0 - b2) * stationary_var }
    }

    /// Conditions on `y = c g + v`, `v ~ CN(0, sigma2_v)`. Returns the
    /// posterior moments and the predictive log likelihood
    /// `log CN(y; c mu, |c|^2 sigma + sigma2_v)`.
    #[inline]
    pub fn update(self, y: ComplexSample, c: ComplexSample, sigma2_v: f64) -> Result<(Self, f64)> {
        if !(y.is_finite() && c.is_finite() && self.mu.is_finite() && self.sigma.is_finite()) {
            return Err(Error::InvalidUpdate);
        }
        let innovation = y - c * self.mu;
        let s = c.norm_sqr() * self.sigma + sigma2_v;
        let gain = c.conj().scale(self.sigma / s);
        let mu = self.mu + gain * innovation;
        // (1 - K c) sigma, with K c real here
        let sigma = (self.sigma * sigma2_v / s).max(0.0);
        let loglik = log_cn(y, c * self.mu, s);
        Ok((Self { mu, sigma }, loglik))
    }
}

/// Predict step under the unit-variance channel convention.
pub fn kalman_predict(prev: KalmanStat, beta: f64) -> KalmanStat {
    prev.predict(beta, 1.0)
}

pub fn kalman_update(
    pred: KalmanStat,
    y: ComplexSample,
    c: ComplexSample,
    sigma2_v: f64,
) -> Result<(KalmanStat, f64)> {
    pred.update(y, c, sigma2_v)
}
