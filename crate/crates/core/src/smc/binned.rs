//! Binned evaluation of the score recursion for Gaussian AR(1) transitions.
//!
//! Work in units of σ. With source means `m_j = φ x'_j`, sources and targets
//! are placed on a common grid of bins of width `WIDTH`. For a target
//! `x_i = c_a + δ_i` and a source `m_j = c_b + ε_j`, put `u = c_a - c_b + δ_i`;
//! then `x_i - m_j = u - ε_j` and
//!
//! ```text
//! w'_j q(x_i | x'_j) ∝ exp(-u²/2) · exp(lw_j + (c_a - c_b) ε_j - ε_j²/2) · exp(δ_i ε_j).
//! ```
//!
//! Since `|δ_i ε_j| ≤ WIDTH²/4 = 1`, a Taylor series separates the last
//! factor, and per-bin-pair moments `Σ_j f_j exp(…) ε_j^p` of the source
//! features replace the sum over all pairs. Bin pairs more than `MAX_OFFSET`
//! bins apart carry relative weight below `e^{-400}` and are skipped; rows
//! whose total falls under `MIN_TOTAL` are handed back for exact evaluation.

use alloc::vec;
use alloc::vec::Vec;

use crate::models::Ar1Kernel;

const WIDTH: f64 = 2.0;
/// Taylor terms kept; the remainder is below `e / ORDER!`.
const ORDER: usize = 20;
const MAX_OFFSET: i64 = 15;
const MIN_TOTAL: f64 = 1e-100;
/// Grids wider than this many bins are not worth binning.
const MAX_BINS: f64 = 1e6;

#[derive(Debug, Clone, Copy)]
struct Bin {
    index: i64,
    start: usize,
    end: usize,
}

/// Sorts `(bin, item)` pairs and returns the occupied bins as ranges into them.
fn group(keys: &mut [(i64, usize)]) -> Vec<Bin> {
    keys.sort_unstable();
    let mut bins: Vec<Bin> = Vec::new();
    for (pos, &(b, _)) in keys.iter().enumerate() {
        match bins.last_mut() {
            Some(last) if last.index == b => last.end = pos + 1,
            _ => bins.push(Bin {
                index: b,
                start: pos,
                end: pos + 1,
            }),
        }
    }
    bins
}

/// For each bin of `from`, the range of bins of `to` within `MAX_OFFSET`.
fn near_ranges(from: &[Bin], to: &[Bin]) -> Vec<(usize, usize)> {
    let (mut lo, mut hi) = (0, 0);
    from.iter()
        .map(|b| {
            while lo < to.len() && to[lo].index < b.index - MAX_OFFSET {
                lo += 1;
            }
            hi = hi.max(lo);
            while hi < to.len() && to[hi].index <= b.index + MAX_OFFSET {
                hi += 1;
            }
            (lo, hi)
        })
        .collect()
}

/// Writes the mixed score rows for all targets that the binned sums resolve;
/// targets left to the caller are appended to `exact_rows`. Returns `false`
/// without touching `out` when binning does not pay off or does not apply.
#[allow(clippy::too_many_arguments)]
pub(super) fn binned_recursion(
    kernel: &Ar1Kernel,
    prev_particles: &[f64],
    prev_log_weights: &[f64],
    prev_alphas: &[f64],
    new_particles: &[f64],
    obs_grads: &[f64],
    d: usize,
    out: &mut [f64],
    exact_rows: &mut Vec<usize>,
) -> bool {
    // Features per source: 1, x'_j and the d components of α'_j.
    macro_rules! run {
        ($f:literal) => {
            run::<$f>(
                kernel,
                prev_particles,
                prev_log_weights,
                prev_alphas,
                new_particles,
                obs_grads,
                out,
                exact_rows,
            )
        };
    }
    match d {
        1 => run!(3),
        2 => run!(4),
        3 => run!(5),
        4 => run!(6),
        5 => run!(7),
        6 => run!(8),
        _ => false,
    }
}

#[allow(clippy::too_many_arguments)]
fn run<const F: usize>(
    kernel: &Ar1Kernel,
    prev_particles: &[f64],
    prev_log_weights: &[f64],
    prev_alphas: &[f64],
    new_particles: &[f64],
    obs_grads: &[f64],
    out: &mut [f64],
    exact_rows: &mut Vec<usize>,
) -> bool {
    let d = F - 2;
    let (phi, sigma) = (kernel.phi(), kernel.sigma());
    let scale = 1.0 / sigma;
    if !(scale.is_finite() && scale > 0.0) {
        return false;
    }
    let means: Vec<f64> = prev_particles.iter().map(|&x| phi * x * scale).collect();
    let targets: Vec<f64> = new_particles.iter().map(|&x| x * scale).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in means.iter().chain(&targets) {
        if !v.is_finite() {
            return false;
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if (hi - lo) / WIDTH > MAX_BINS {
        return false;
    }
    let bin_of = |v: f64| libm::floor((v - lo) / WIDTH) as i64;
    let center = |b: i64| lo + (b as f64 + 0.5) * WIDTH;

    let mut src: Vec<(i64, usize)> = means
        .iter()
        .enumerate()
        .map(|(j, &m)| (bin_of(m), j))
        .collect();
    let mut tgt: Vec<(i64, usize)> = targets
        .iter()
        .enumerate()
        .map(|(i, &x)| (bin_of(x), i))
        .collect();
    let src_bins = group(&mut src);
    let tgt_bins = group(&mut tgt);
    let src_near = near_ranges(&src_bins, &tgt_bins);
    let tgt_near = near_ranges(&tgt_bins, &src_bins);

    let stride = (ORDER + 2) * F;
    let mut work = 0usize;
    let mut pair_offset = Vec::with_capacity(src_bins.len());
    let mut pairs = 0usize;
    for (b, &(l, h)) in src_bins.iter().zip(&src_near) {
        pair_offset.push(pairs);
        pairs += h - l;
        work += (b.end - b.start) * (h - l);
    }
    for (b, &(l, h)) in tgt_bins.iter().zip(&tgt_near) {
        work += (b.end - b.start) * (h - l);
    }
    let direct = prev_particles.len() * new_particles.len() * (40 + 2 * d);
    if work * (2 * stride + 40) >= direct {
        return false;
    }

    // Source moments per (source bin, nearby target bin) pair.
    let mut moments = vec![[0.0; F]; pairs * (ORDER + 2)];
    let mut feature = [0.0; F];
    for (s, b) in src_bins.iter().enumerate() {
        let (l, h) = src_near[s];
        let c_b = center(b.index);
        for &(_, j) in &src[b.start..b.end] {
            let eps = means[j] - c_b;
            let base = prev_log_weights[j] - 0.5 * eps * eps;
            if base == f64::NEG_INFINITY {
                continue;
            }
            feature[0] = 1.0;
            feature[1] = prev_particles[j];
            feature[2..].copy_from_slice(&prev_alphas[j * d..(j + 1) * d]);
            for (k, t) in tgt_bins[l..h].iter().enumerate() {
                let offset = (t.index - b.index) as f64 * WIDTH;
                let mut power = libm::exp(base + offset * eps);
                for row in &mut moments[(pair_offset[s] + k) * (ORDER + 2)..][..ORDER + 2] {
                    for (m, f) in row.iter_mut().zip(&feature) {
                        *m += power * f;
                    }
                    power *= eps;
                }
            }
        }
    }

    let mut coef = [0.0; ORDER];
    for (t, a) in tgt_bins.iter().enumerate() {
        let (l, h) = tgt_near[t];
        let c_a = center(a.index);
        for &(_, i) in &tgt[a.start..a.end] {
            let delta = targets[i] - c_a;
            coef[0] = 1.0;
            for p in 1..ORDER {
                coef[p] = coef[p - 1] * delta / p as f64;
            }
            let (mut total, mut r_xprev, mut r_sq) = (0.0, 0.0, 0.0);
            let mut mixed = [0.0; F];
            for (s, b) in src_bins.iter().enumerate().take(h).skip(l) {
                let u = (a.index - b.index) as f64 * WIDTH + delta;
                let e = libm::exp(-0.5 * u * u);
                let block =
                    &moments[(pair_offset[s] + t - src_near[s].0) * (ORDER + 2)..][..ORDER + 2];
                let mut sums = [0.0; F];
                let (mut one_1, mut one_2, mut x_1) = (0.0, 0.0, 0.0);
                for (p, &c) in coef.iter().enumerate() {
                    for (acc, m) in sums.iter_mut().zip(&block[p]) {
                        *acc += c * m;
                    }
                    one_1 += c * block[p + 1][0];
                    x_1 += c * block[p + 1][1];
                    one_2 += c * block[p + 2][0];
                }
                total += e * sums[0];
                r_sq += e * (u * u * sums[0] - 2.0 * u * one_1 + one_2);
                r_xprev += e * (u * sums[1] - x_1);
                for (m, v) in mixed.iter_mut().zip(&sums[2..]) {
                    *m += e * v;
                }
            }
            if !(total >= MIN_TOTAL && total.is_finite()) {
                exact_rows.push(i);
                continue;
            }
            // Back to natural units: r = σ (u - ε).
            let mixed = &mut mixed[..d];
            kernel.add_grad_moments(total, r_xprev * sigma, r_sq * sigma * sigma, mixed);
            let row = &mut out[i * d..(i + 1) * d];
            for ((o, m), g) in row
                .iter_mut()
                .zip(mixed.iter())
                .zip(&obs_grads[i * d..(i + 1) * d])
            {
                *o = g + m / total;
            }
        }
    }
    true
}
