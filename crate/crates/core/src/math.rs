//! Scalar helpers shared by the filter, the samplers and the bound.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::ComplexSample;

/// `log(sum(exp(x)))`, stable for large magnitudes. Returns `-inf` for an
/// empty slice or when every entry is `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Log density of the circular complex Gaussian `CN(x; mean, var)`:
/// `-ln(pi var) - |x - mean|^2 / var`.
#[inline]
pub fn log_cn(x: ComplexSample, mean: ComplexSample, var: f64) -> f64 {
    -(PI * var).ln() - (x - mean).norm_sqr() / var
}

/// Log Beta density; `-inf` outside the open unit interval.
pub fn ln_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return f64::NEG_INFINITY;
    }
    let ln_norm = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b);
    ln_norm + (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sorts a copy of `values` (NaN last) and returns the requested quantile.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = alloc::vec::Vec::from(values);
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}
