use alloc::vec;
use alloc::vec::Vec;

use super::binned::binned_recursion;
use super::exp::exp_nonpositive;
use super::ParticleState;
use crate::models::{HmmModel, TransitionKernel};
use crate::{Error, Result};

/// One step of the particle score recursion.
///
/// For each new particle `x_i`,
///
/// ```text
/// α_i = ∇log g(y | x_i) + Σ_j w̃_ij {∇log q(x_i | x'_j) + α'_j},
/// w̃_ij ∝ w'_j q(x_i | x'_j),  Σ_j w̃_ij = 1,
/// ```
///
/// where `(x'_j, w'_j, α'_j)` is the previous cloud. The direct sum costs
/// O(N²) and forms the mixture weights in log space with the per-row maximum
/// subtracted. Gaussian AR(1) kernels use a binned expansion of the same sum
/// that agrees with it to rounding error.
///
/// `obs_grads` holds `∇log g(y | x_i)` row-major (`N × d`); so do
/// `prev_alphas` and `out`. `t` only labels a degenerate-filter error.
#[allow(clippy::too_many_arguments)]
pub fn score_recursion<K: TransitionKernel>(
    kernel: &K,
    prev_particles: &[f64],
    prev_log_weights: &[f64],
    prev_alphas: &[f64],
    new_particles: &[f64],
    obs_grads: &[f64],
    d: usize,
    t: usize,
    out: &mut [f64],
    scratch: &mut Vec<f64>,
) -> Result<()> {
    let m = prev_particles.len();
    scratch.clear();
    scratch.resize(m + d, 0.0);
    let (weights, acc) = scratch.split_at_mut(m);
    let mut row = |i: usize, out: &mut [f64]| {
        exact_row(
            kernel,
            prev_particles,
            prev_log_weights,
            prev_alphas,
            new_particles[i],
            &obs_grads[i * d..(i + 1) * d],
            weights,
            acc,
            &mut out[i * d..(i + 1) * d],
        )
        .ok_or(Error::DegenerateFilter { t })
    };
    if let Some(ar1) = kernel.as_ar1() {
        let mut exact_rows = Vec::new();
        if binned_recursion(
            ar1,
            prev_particles,
            prev_log_weights,
            prev_alphas,
            new_particles,
            obs_grads,
            d,
            out,
            &mut exact_rows,
        ) {
            for i in exact_rows {
                row(i, out)?;
            }
            return Ok(());
        }
    }
    for i in 0..new_particles.len() {
        row(i, out)?;
    }
    Ok(())
}

/// Direct sum for one new particle; `None` when every mixture weight is zero.
#[allow(clippy::too_many_arguments)]
fn exact_row<K: TransitionKernel>(
    kernel: &K,
    prev_particles: &[f64],
    prev_log_weights: &[f64],
    prev_alphas: &[f64],
    xi: f64,
    obs_grad: &[f64],
    weights: &mut [f64],
    acc: &mut [f64],
    out: &mut [f64],
) -> Option<()> {
    let d = acc.len();
    let mut max = f64::NEG_INFINITY;
    for ((w, &xj), &lw) in weights.iter_mut().zip(prev_particles).zip(prev_log_weights) {
        *w = lw + kernel.log_kernel(xj, xi);
        max = max.max(*w);
    }
    if !max.is_finite() {
        return None;
    }
    let mut total = 0.0;
    for w in weights.iter_mut() {
        *w = exp_nonpositive(*w - max);
        total += *w;
    }
    acc.fill(0.0);
    kernel.add_grad_sum(prev_particles, weights, xi, acc);
    for (&w, alpha) in weights.iter().zip(prev_alphas.chunks_exact(d)) {
        for (a, &p) in acc.iter_mut().zip(alpha) {
            *a += w * p;
        }
    }
    for ((o, a), g) in out.iter_mut().zip(acc.iter()).zip(obs_grad) {
        *o = g + a / total;
    }
    Some(())
}

/// Updated score tags for `new_particles` given the previous (post-resampling)
/// cloud `prev`, which must carry tags.
pub fn score_step<M: HmmModel + ?Sized>(
    model: &M,
    theta: &[f64],
    prev: &ParticleState,
    new_particles: &[f64],
    y: f64,
) -> Result<Vec<f64>> {
    let d = model.dim();
    let prev_alphas = prev.alphas.as_deref().ok_or(Error::InvalidInput(
        "previous particle state carries no score tags",
    ))?;
    let mut obs_grads = vec![0.0; new_particles.len() * d];
    for (x, g) in new_particles.iter().zip(obs_grads.chunks_exact_mut(d)) {
        model.grad_log_g(theta, y, *x, g);
    }
    let log_weights: Vec<f64> = prev.weights.iter().map(|&w| libm::log(w)).collect();
    let mut out = vec![0.0; new_particles.len() * d];
    let mut scratch = Vec::new();
    score_recursion(
        &model.transition_kernel(theta),
        &prev.particles,
        &log_weights,
        prev_alphas,
        new_particles,
        &obs_grads,
        d,
        prev.t + 1,
        &mut out,
        &mut scratch,
    )?;
    Ok(out)
}
