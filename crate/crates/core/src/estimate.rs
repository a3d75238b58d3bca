//! Posterior summaries of a recorded chain.

use alloc::vec::Vec;

use crate::math::quantile_sorted;
use crate::model::{ComplexGrid, LatentPath, StaticParams};
use crate::samplers::ChainState;
use crate::{ComplexSample, Error, Result};

/// Posterior means and equal-tailed bands, computed independently for the
/// real and imaginary part of every path coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSummary {
    pub mmse_path: LatentPath,
    pub ci_lower: LatentPath,
    pub ci_upper: LatentPath,
    pub mmse_params: StaticParams,
    pub params_lower: StaticParams,
    pub params_upper: StaticParams,
    pub ci_level: f64,
    pub samples: usize,
}

/// Squared-error summary, `|estimate - truth|^2` averaged over time and
/// relays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathMse {
    pub h: f64,
    pub g: f64,
    pub total: f64,
}

/// Mean and the `(1 - level)/2`, `(1 + level)/2` quantiles of a scalar sample.
pub fn scalar_summary(values: &mut [f64], ci_level: f64) -> (f64, f64, f64) {
    // shifted by the first value, so a constant sample has an exact mean
    let origin = values.first().copied().unwrap_or(0.0);
    let mean = origin + values.iter().map(|v| v - origin).sum::<f64>() / values.len() as f64;
    values.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - ci_level);
    (mean, quantile_sorted(values, tail), quantile_sorted(values, 1.0 - tail))
}

pub fn summarize_states(states: &[ChainState], ci_level: f64) -> Result<EstimateSummary> {
    let first = states.first().ok_or(Error::EmptyTrace)?;
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(Error::InvalidConfig("credible level must lie in (0, 1)"));
    }
    let (relays, t_len) = (first.path.relays(), first.path.len());
    let mut mean = LatentPath::zeros(relays, t_len);
    let mut lower = LatentPath::zeros(relays, t_len);
    let mut upper = LatentPath::zeros(relays, t_len);
    let mut buf = Vec::with_capacity(states.len());

    for which in 0..3 {
        for idx in 0..relays * t_len {
            let mut parts = [(0.0, 0.0, 0.0); 2];
            for (part, slot) in parts.iter_mut().enumerate() {
                buf.clear();
                buf.extend(states.iter().map(|s| {
                    let z = pick(&s.path, which).as_slice()[idx];
                    if part == 0 { z.re } else { z.im }
                }));
                *slot = scalar_summary(&mut buf, ci_level);
            }
            let [(mr, lr, ur), (mi, li, ui)] = parts;
            let set = |p: &mut LatentPath, v: ComplexSample| {
                let g = match which {
                    0 => &mut p.h,
                    1 => &mut p.g,
                    _ => &mut p.w,
                };
                g.as_mut_slice()[idx] = v;
            };
            set(&mut mean, ComplexSample::new(mr, mi));
            set(&mut lower, ComplexSample::new(lr, li));
            set(&mut upper, ComplexSample::new(ur, ui));
        }
    }

    let d = 2 * relays;
    let mut pm = Vec::with_capacity(d);
    let mut pl = Vec::with_capacity(d);
    let mut pu = Vec::with_capacity(d);
    let vectors: Vec<Vec<f64>> = states.iter().map(|s| s.params.to_vector()).collect();
    for k in 0..d {
        buf.clear();
        buf.extend(vectors.iter().map(|v| v[k]));
        let (m, lo, hi) = scalar_summary(&mut buf, ci_level);
        pm.push(m);
        pl.push(lo);
        pu.push(hi);
    }

    Ok(EstimateSummary {
        mmse_path: mean,
        ci_lower: lower,
        ci_upper: upper,
        mmse_params: StaticParams::from_vector(&pm)?,
        params_lower: StaticParams::from_vector(&pl)?,
        params_upper: StaticParams::from_vector(&pu)?,
        ci_level,
        samples: states.len(),
    })
}

/// Posterior summary of the post-burn-in part of a chain.
pub fn summarize_chain(
    trace: &crate::samplers::ChainTrace,
    burnin: usize,
    ci_level: f64,
) -> Result<EstimateSummary> {
    let skip = burnin.div_ceil(trace.thin.max(1));
    let states = trace.states.get(skip..).unwrap_or(&[]);
    summarize_states(states, ci_level)
}

fn pick(p: &LatentPath, which: usize) -> &ComplexGrid {
    match which {
        0 => &p.h,
        1 => &p.g,
        _ => &p.w,
    }
}

fn grid_mse(est: &ComplexGrid, truth: &ComplexGrid) -> Result<f64> {
    if !est.same_shape(truth) {
        return Err(Error::ShapeMismatch { expected: truth.as_slice().len(), got: est.as_slice().len() });
    }
    let n = truth.as_slice().len().max(1) as f64;
    Ok(est
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (*a - *b).norm_sqr())
        .sum::<f64>()
        / n)
}

/// Per-symbol squared error of the path estimate; `total = h + g`.
pub fn mse_against_truth(estimate: &LatentPath, truth: &LatentPath) -> Result<PathMse> {
    let h = grid_mse(&estimate.h, &truth.h)?;
    let g = grid_mse(&estimate.g, &truth.g)?;
    Ok(PathMse { h, g, total: h + g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::sync::Arc;
    use alloc::vec;

    fn state(h: f64, alpha: f64) -> ChainState {
        let mut path = LatentPath::zeros(1, 2);
        path.h.set(0, 0, ComplexSample::new(h, -h));
        path.g.set(0, 1, ComplexSample::new(2.0 * h, 0.0));
        ChainState {
            params: StaticParams::uniform(1, alpha, 0.5).unwrap(),
            path: Arc::new(path),
            log_marginal_likelihood: 0.0,
            log_prior: 0.0,
        }
    }

    #[test]
    fn mean_and_band_of_known_samples() {
        let states: Vec<_> = (0..=4).map(|k| state(k as f64, 0.1 + 0.2 * k as f64)).collect();
        let s = summarize_states(&states, 0.5).unwrap();
        assert_eq!(s.mmse_path.h.get(0, 0), ComplexSample::new(2.0, -2.0));
        assert_eq!(s.mmse_path.g.get(0, 1), ComplexSample::new(4.0, 0.0));
        assert_eq!(s.ci_lower.h.get(0, 0), ComplexSample::new(1.0, -3.0));
        assert_eq!(s.ci_upper.h.get(0, 0), ComplexSample::new(3.0, -1.0));
        assert!((s.mmse_params.alpha[0] - 0.5).abs() < 1e-12);
        assert_eq!(s.samples, 5);
    }

    #[test]
    fn burnin_skips_recorded_states() {
        let trace = crate::samplers::ChainTrace {
            states: vec![state(100.0, 0.5), state(1.0, 0.5), state(3.0, 0.5)],
            thin: 10,
            ..Default::default()
        };
        let s = summarize_chain(&trace, 10, 0.9).unwrap();
        assert_eq!(s.samples, 2);
        assert_eq!(s.mmse_path.h.get(0, 0).re, 2.0);
        assert!(matches!(summarize_chain(&trace, 30, 0.9), Err(Error::EmptyTrace)));
    }

    #[test]
    fn mse_examples() {
        let truth = LatentPath::zeros(1, 4);
        let mut est = LatentPath::zeros(1, 4);
        est.h.set(0, 0, ComplexSample::new(2.0, 0.0));
        est.g.set(0, 3, ComplexSample::new(0.0, 1.0));
        let m = mse_against_truth(&est, &truth).unwrap();
        assert_eq!((m.h, m.g, m.total), (1.0, 0.25, 1.25));
        assert!(matches!(
            mse_against_truth(&LatentPath::zeros(1, 3), &truth),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
