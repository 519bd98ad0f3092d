//! Laplace approximation to the log-evidence.
//!
//! ```text
//! log p(y) ≈ ℓ(θ̂) + (d/2) log 2π - (d/2) log n - ½ log det Ĵ + log π(θ̂)
//! ```
//!
//! with `Ĵ = -∇²ℓ(θ̂) / n`. The curvature is estimated in unconstrained
//! coordinates `u` by central differences of particle log-likelihoods that
//! share their seeds across the stencil; the prior is carried over to `u`
//! with the log-Jacobian of the transform.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::models::{HmmModel, LN_2PI};
use crate::rng::derive_seed;
use crate::smc::{run_filter, FilterConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceConfig {
    pub filter: FilterConfig,
    /// Master seed; replicate `r` uses `derive_seed(seed, r)` at every stencil point.
    pub seed: u64,
    /// Finite-difference step in unconstrained coordinates.
    pub step: f64,
    pub replicates: usize,
    /// Eigenvalues of `Ĵ` below `eigen_floor · λ_max` are raised to that level.
    pub eigen_floor: f64,
}

impl Default for LaplaceConfig {
    fn default() -> Self {
        Self {
            filter: FilterConfig {
                particles: 200,
                resample_threshold: 1.0,
                ..FilterConfig::default()
            },
            seed: 0,
            step: 0.03,
            replicates: 5,
            eigen_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceEvidence {
    pub log_evidence: f64,
    /// Per-observation information `Ĵ` in unconstrained coordinates after
    /// projection, row-major `d × d`.
    pub information: Vec<f64>,
    /// Whether eigenvalues had to be raised to make `Ĵ` positive definite.
    pub projected: bool,
}

/// Total observed information `-∇²ℓ` in unconstrained coordinates, averaged
/// over `config.replicates` common-seed stencils. Row-major `d × d`.
pub fn particle_observed_information<M: HmmModel + ?Sized>(
    model: &M,
    theta: &[f64],
    observations: &[f64],
    config: &LaplaceConfig,
) -> Result<Vec<f64>> {
    let d = model.dim();
    let u0 = model.to_unconstrained(theta)?;
    if config.replicates == 0 || config.step.is_nan() || config.step <= 0.0 {
        return Err(Error::InvalidInput(
            "Laplace stencil needs a positive step and replicates",
        ));
    }
    let h = config.step;
    let filter = FilterConfig {
        track_score: false,
        ..config.filter.clone()
    };
    let mut info = vec![0.0; d * d];
    for r in 0..config.replicates {
        let seed = derive_seed(config.seed, r as u64);
        let eval = |shift: &[(usize, f64)]| -> Result<f64> {
            let mut u = u0.clone();
            for &(i, s) in shift {
                u[i] += s;
            }
            let theta = model.to_natural(&u)?;
            Ok(run_filter(model, &theta, observations, &filter, seed)?.loglik)
        };
        let f0 = eval(&[])?;
        for i in 0..d {
            let fp = eval(&[(i, h)])?;
            let fm = eval(&[(i, -h)])?;
            info[i * d + i] -= (fp - 2.0 * f0 + fm) / (h * h);
            for j in 0..i {
                let fpp = eval(&[(i, h), (j, h)])?;
                let fpm = eval(&[(i, h), (j, -h)])?;
                let fmp = eval(&[(i, -h), (j, h)])?;
                let fmm = eval(&[(i, -h), (j, -h)])?;
                let v = -(fpp - fpm - fmp + fmm) / (4.0 * h * h);
                info[i * d + j] += v;
                info[j * d + i] += v;
            }
        }
    }
    let scale = 1.0 / config.replicates as f64;
    info.iter_mut().for_each(|v| *v *= scale);
    Ok(info)
}

/// Laplace log-evidence from a per-observation information matrix `Ĵ`
/// (row-major `d × d`) and the log prior density, both in the same
/// coordinates. Returns the value, the projected `Ĵ`, and whether projection
/// was needed.
pub fn log_evidence_from_information(
    loglik: f64,
    information: &[f64],
    d: usize,
    n: f64,
    log_prior: f64,
    eigen_floor: f64,
) -> Result<(f64, Vec<f64>, bool)> {
    if d == 0 || information.len() != d * d {
        return Err(Error::InvalidInput(
            "information matrix must be d × d with d ≥ 1",
        ));
    }
    if information.iter().any(|v| !v.is_finite()) {
        return Err(Error::EvidenceUnavailable("non-finite information matrix"));
    }
    let m = DMatrix::from_row_slice(d, d, information);
    let sym = (&m + m.transpose()) * 0.5;
    let eigen = sym.clone().symmetric_eigen();
    let max = eigen.eigenvalues.max();
    if max.is_nan() || max <= 0.0 {
        return Err(Error::EvidenceUnavailable(
            "information matrix has no positive eigenvalue",
        ));
    }
    let floor = eigen_floor * max;
    let projected = eigen.eigenvalues.iter().any(|&l| l < floor);
    let (log_det, matrix) = if projected {
        let clipped = eigen.eigenvalues.map(|l| l.max(floor));
        let log_det = clipped.iter().map(|&l| libm::log(l)).sum::<f64>();
        let rebuilt =
            &eigen.eigenvectors * DMatrix::from_diagonal(&clipped) * eigen.eigenvectors.transpose();
        (log_det, rebuilt)
    } else {
        (
            eigen.eigenvalues.iter().map(|&l| libm::log(l)).sum::<f64>(),
            sym,
        )
    };
    let half_d = 0.5 * d as f64;
    let value = loglik + half_d * LN_2PI - half_d * libm::log(n) - 0.5 * log_det + log_prior;
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = matrix[(i, j)];
        }
    }
    Ok((value, out, projected))
}

/// Laplace approximation at `theta_hat` with a prior density over the
/// natural parameters.
pub fn laplace_log_evidence<M, P>(
    loglik_hat: f64,
    theta_hat: &[f64],
    observations: &[f64],
    model: &M,
    prior_log_density: P,
    config: &LaplaceConfig,
) -> Result<LaplaceEvidence>
where
    M: HmmModel + ?Sized,
    P: Fn(&[f64]) -> f64,
{
    let n = observations.len() as f64;
    let d = model.dim();
    let mut info = particle_observed_information(model, theta_hat, observations, config)?;
    info.iter_mut().for_each(|v| *v /= n);
    let log_jacobian: f64 = model
        .jacobian(theta_hat)
        .iter()
        .map(|j| libm::log(j.abs()))
        .sum();
    let log_prior = prior_log_density(theta_hat) + log_jacobian;
    let (log_evidence, information, projected) =
        log_evidence_from_information(loglik_hat, &info, d, n, log_prior, config.eigen_floor)?;
    Ok(LaplaceEvidence {
        log_evidence,
        information,
        projected,
    })
}
