use alloc::vec::Vec;

use crate::rng::uniform;

/// Resampling scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ResampleScheme {
    Multinomial,
    #[default]
    Systematic,
}

/// Effective sample size `1 / Σ w²` of normalised weights.
pub fn ess(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Systematic resampling with offset `u ∈ [0, 1)`: draws `count` ancestors at
/// the stratified points `(u + k) / count`.
pub fn systematic_resample(weights: &[f64], count: usize, u: f64, out: &mut Vec<usize>) {
    out.clear();
    let last = weights.len() - 1;
    let mut cumulative = weights[0];
    let mut j = 0;
    for k in 0..count {
        let point = (u + k as f64) / count as f64;
        while point >= cumulative && j < last {
            j += 1;
            cumulative += weights[j];
        }
        out.push(j);
    }
}

/// Multinomial resampling by inverse-CDF lookup of `count` uniforms.
pub fn multinomial_resample<R: rand::Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let last = weights.len() - 1;
    for _ in 0..count {
        let point = uniform(rng) * acc;
        let idx = cdf.partition_point(|&c| c <= point).min(last);
        out.push(idx);
    }
}

/// Draws `weights.len()` ancestor indices. The systematic scheme takes a
/// single uniform from `rng`.
pub fn resample<R: rand::Rng + ?Sized>(
    weights: &[f64],
    scheme: ResampleScheme,
    rng: &mut R,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(weights.len());
    match scheme {
        ResampleScheme::Systematic => {
            systematic_resample(weights, weights.len(), uniform(rng), &mut out)
        }
        ResampleScheme::Multinomial => multinomial_resample(weights, weights.len(), rng, &mut out),
    }
    out
}
