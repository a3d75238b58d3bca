use alloc::vec::Vec;

use rand::Rng;

use crate::{Error, Result};

/// Stratified resampling: one uniform draw inside each of the `N` strata
/// `[i/N, (i+1)/N)`, inverted through the cumulative weights.
pub fn stratified_resample<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(weights.len());
    stratified_resample_into(weights, rng, &mut out)?;
    Ok(out)
}

pub fn stratified_resample_into<R: Rng + ?Sized>(
    weights: &[f64],
    rng: &mut R,
    out: &mut Vec<usize>,
) -> Result<()> {
    let n = weights.len();
    let sum: f64 = weights.iter().sum();
    if n == 0 || (sum - 1.0).abs() > 1e-6 || weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::UnnormalizedWeights { sum });
    }
    out.clear();
    let inv_n = 1.0 / n as f64;
    let mut cumulative = weights[0];
    let mut j = 0;
    for i in 0..n {
        let u = (i as f64 + rng.random::<f64>()) * inv_n;
        while u >= cumulative && j + 1 < n {
            j += 1;
            cumulative += weights[j];
        }
        out.push(j);
    }
    Ok(())
}
