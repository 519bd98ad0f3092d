use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Penalty `pen(k, n)` of a penalised criterion `-ℓ + pen(k, n)` over a
/// ladder of models indexed by `k`.
pub trait Penalty {
    fn penalty(&self, k: usize, n: f64) -> f64;

    /// Whether `pen(·, n)` is strictly increasing over the first `ladder` models.
    fn increasing_on_ladder(&self, ladder: usize, n: f64) -> bool {
        (1..ladder).all(|k| self.penalty(k, n) > self.penalty(k - 1, n))
    }
}

impl<F: Fn(usize, f64) -> f64> Penalty for F {
    fn penalty(&self, k: usize, n: f64) -> f64 {
        self(k, n)
    }
}

/// `pen(k, n) = d_k` (AIC / 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AicPenalty {
    dims: Vec<usize>,
}

impl AicPenalty {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }
}

impl Penalty for AicPenalty {
    fn penalty(&self, k: usize, _n: f64) -> f64 {
        self.dims[k] as f64
    }
}

/// `pen(k, n) = (d_k / 2) log n` (BIC / 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BicPenalty {
    dims: Vec<usize>,
}

impl BicPenalty {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }
}

impl Penalty for BicPenalty {
    fn penalty(&self, k: usize, n: f64) -> f64 {
        0.5 * self.dims[k] as f64 * libm::log(n)
    }
}

/// `pen(k, n) = c · d_k · log log n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLogPenalty {
    dims: Vec<usize>,
    scale: f64,
}

impl LogLogPenalty {
    pub fn new(dims: Vec<usize>, scale: f64) -> Self {
        Self { dims, scale }
    }
}

impl Penalty for LogLogPenalty {
    fn penalty(&self, k: usize, n: f64) -> f64 {
        self.scale * self.dims[k] as f64 * libm::log(libm::log(n))
    }
}

/// Consistency class implied by the growth of a penalty gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Strong,
    Weak,
    Inconsistent,
}

/// Numerical stand-ins for the limits in the consistency conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    /// Increasing sample sizes; at least four, the largest at least 10⁸.
    pub grid: Vec<f64>,
    /// A sequence counts as diverging when it is nondecreasing on the grid
    /// and its last value exceeds its first by at least this factor.
    pub divergence_ratio: f64,
    /// `Δ(n)/n` must be nonincreasing and at most this at the largest `n`.
    pub vanishing_rate: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            grid: vec![1e3, 1e4, 1e6, 1e8],
            divergence_ratio: 1.25,
            vanishing_rate: 1e-3,
        }
    }
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn diverges(v: &[f64], ratio: f64) -> bool {
    let (first, last) = (v[0], v[v.len() - 1]);
    first > 0.0 && nondecreasing(v) && last >= ratio * first
}

/// Classifies the gap `Δ(n) = pen(k', n) - pen(k, n)`, `k' > k`:
///
/// * strong when `Δ(n)/n → 0` and `Δ(n)/log log n → ∞`,
/// * weak when `Δ(n)/n → 0` and `Δ(n) → ∞` only,
/// * inconsistent otherwise,
///
/// with the limits judged on `config.grid`.
pub fn classify_penalty<P: Penalty + ?Sized>(
    pen: &P,
    k: usize,
    k_prime: usize,
    config: &ClassifierConfig,
) -> Result<Consistency> {
    let grid = &config.grid;
    if k_prime <= k {
        return Err(Error::InvalidInput("k' must exceed k"));
    }
    if grid.len() < 4 || !grid.windows(2).all(|w| w[1] > w[0]) || grid[0] <= core::f64::consts::E {
        return Err(Error::InvalidInput(
            "grid must hold at least four increasing sizes above e",
        ));
    }
    if grid[grid.len() - 1] < 1e8 {
        return Err(Error::InvalidInput("grid must reach 1e8"));
    }
    let delta: Vec<f64> = grid
        .iter()
        .map(|&n| pen.penalty(k_prime, n) - pen.penalty(k, n))
        .collect();
    if delta.iter().any(|d| !d.is_finite()) || !(nondecreasing(&delta) || nonincreasing(&delta)) {
        return Err(Error::NonMonotonePenalty);
    }
    let per_obs: Vec<f64> = delta.iter().zip(grid).map(|(d, n)| d / n).collect();
    let vanishes = nonincreasing(&per_obs) && per_obs[per_obs.len() - 1] <= config.vanishing_rate;
    if !vanishes {
        return Ok(Consistency::Inconsistent);
    }
    let per_loglog: Vec<f64> = delta
        .iter()
        .zip(grid)
        .map(|(d, n)| d / libm::log(libm::log(*n)))
        .collect();
    if diverges(&per_loglog, config.divergence_ratio) {
        Ok(Consistency::Strong)
    } else if diverges(&delta, config.divergence_ratio) {
        Ok(Consistency::Weak)
    } else {
        Ok(Consistency::Inconsistent)
    }
}
