//! Exact filtering for [`LinearGaussian`].
//!
//! The predictive mean and variance are propagated together with their
//! derivatives with respect to θ = (φ, σ_X, σ_V), which yields the exact
//! score alongside the log-likelihood in one pass. The filter starts from the
//! stationary law, so every quantity depends on θ through the initial
//! variance as well.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::models::{HmmModel, LinearGaussian, Theta, LN_2PI};
use crate::{Error, Result};

const DIM: usize = 3;

/// Predictive moments of `X_t | y_{0:t-1}` and their θ-derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: f64,
    pub variance: f64,
    pub loglik: f64,
    pub d_mean: [f64; DIM],
    pub d_variance: [f64; DIM],
    pub d_loglik: [f64; DIM],
}

impl KalmanState {
    fn stationary(theta: &[f64]) -> Self {
        let (phi, sx) = (theta[0], theta[1]);
        let one_m = 1.0 - phi * phi;
        Self {
            mean: 0.0,
            variance: sx * sx / one_m,
            loglik: 0.0,
            d_mean: [0.0; DIM],
            d_variance: [2.0 * phi * sx * sx / (one_m * one_m), 2.0 * sx / one_m, 0.0],
            d_loglik: [0.0; DIM],
        }
    }

    /// Assimilates `y` and predicts the next state.
    #[allow(clippy::needless_range_loop)]
    fn update(&mut self, theta: &[f64], y: f64) {
        let (phi, sx, sv) = (theta[0], theta[1], theta[2]);
        let r = sv * sv;
        let dr = [0.0, 0.0, 2.0 * sv];

        let s = self.variance + r;
        let e = y - self.mean;
        self.loglik -= 0.5 * (LN_2PI + libm::log(s) + e * e / s);
        let k = self.variance / s;
        let mf = self.mean + k * e;
        let pf = self.variance * (1.0 - k);

        for i in 0..DIM {
            let ds = self.d_variance[i] + dr[i];
            let de = -self.d_mean[i];
            self.d_loglik[i] -= 0.5 * (ds / s + 2.0 * e * de / s - e * e * ds / (s * s));
            let dk = (self.d_variance[i] * s - self.variance * ds) / (s * s);
            let dmf = self.d_mean[i] + dk * e + k * de;
            let dpf = self.d_variance[i] * (1.0 - k) - self.variance * dk;
            self.d_mean[i] = phi * dmf;
            self.d_variance[i] = phi * phi * dpf;
            if i == 0 {
                self.d_mean[i] += mf;
                self.d_variance[i] += 2.0 * phi * pf;
            } else if i == 1 {
                self.d_variance[i] += 2.0 * sx;
            }
        }
        self.mean = phi * mf;
        self.variance = phi * phi * pf + sx * sx;
    }
}

/// Runs the filter over `observations`; the returned state holds the total
/// log-likelihood and its gradient.
pub fn kalman_filter(theta: &[f64], observations: &[f64]) -> Result<KalmanState> {
    LinearGaussian.check_theta(theta)?;
    let mut state = KalmanState::stationary(theta);
    for &y in observations {
        state.update(theta, y);
    }
    Ok(state)
}

/// Exact `log p_θ(y_{0:n-1})`.
pub fn kalman_loglik(theta: &[f64], observations: &[f64]) -> Result<f64> {
    kalman_filter(theta, observations).map(|s| s.loglik)
}

/// Exact `∇_θ log p_θ(y_{0:n-1})` in natural coordinates.
pub fn kalman_score(theta: &[f64], observations: &[f64]) -> Result<Vec<f64>> {
    kalman_filter(theta, observations).map(|s| s.d_loglik.to_vec())
}

/// Score with respect to the unconstrained coordinates.
fn unconstrained_score(theta: &[f64], observations: &[f64]) -> Result<(f64, Vec<f64>)> {
    let state = kalman_filter(theta, observations)?;
    let jac = LinearGaussian.jacobian(theta);
    Ok((
        state.loglik,
        state
            .d_loglik
            .iter()
            .zip(&jac)
            .map(|(g, j)| g * j)
            .collect(),
    ))
}

/// Observed information `-∇²ℓ` in unconstrained coordinates, by central
/// differences of the exact score.
pub fn kalman_observed_information(theta: &[f64], observations: &[f64]) -> Result<Vec<f64>> {
    let u = LinearGaussian.to_unconstrained(theta)?;
    let mut info = vec![0.0; DIM * DIM];
    for j in 0..DIM {
        let h = 1e-5 * (1.0 + u[j].abs());
        let mut up = u.clone();
        up[j] += h;
        let mut dn = u.clone();
        dn[j] -= h;
        let (_, gp) = unconstrained_score(&LinearGaussian.to_natural(&up)?, observations)?;
        let (_, gm) = unconstrained_score(&LinearGaussian.to_natural(&dn)?, observations)?;
        for i in 0..DIM {
            info[i * DIM + j] = -(gp[i] - gm[i]) / (2.0 * h);
        }
    }
    for i in 0..DIM {
        for j in 0..i {
            let avg = 0.5 * (info[i * DIM + j] + info[j * DIM + i]);
            info[i * DIM + j] = avg;
            info[j * DIM + i] = avg;
        }
    }
    Ok(info)
}

/// Settings for [`kalman_mle`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleOptions {
    /// Which of (φ, σ_X, σ_V) are optimised; frozen ones keep their initial value.
    pub free: [bool; DIM],
    /// Stop once the unconstrained score norm drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            free: [true; DIM],
            tolerance: 1e-8,
            max_iterations: 500,
        }
    }
}

/// Result of [`kalman_mle`]: the best point visited.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub theta: Theta,
    pub loglik: f64,
    /// Norm of the unconstrained score over the free coordinates.
    pub score_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl MleFit {
    pub fn free_dim(options: &MleOptions) -> usize {
        options.free.iter().filter(|f| **f).count()
    }
}

/// Maximises the exact log-likelihood over the free coordinates.
///
/// Ascent runs in unconstrained coordinates with an Armijo backtracking line
/// search. The search direction is the Newton direction whenever the
/// finite-difference Hessian of the exact score is negative definite, and the
/// plain gradient otherwise.
pub fn kalman_mle(observations: &[f64], init: &Theta, options: &MleOptions) -> Result<MleFit> {
    if observations.len() < 3 {
        return Err(Error::InvalidInput("MLE needs at least three observations"));
    }
    let mut u = LinearGaussian.to_unconstrained(init)?;
    let free: Vec<usize> = (0..DIM).filter(|&i| options.free[i]).collect();

    let eval = |u: &[f64]| -> Result<(Theta, f64, Vec<f64>)> {
        let theta = LinearGaussian.to_natural(u)?;
        let (ll, g) = unconstrained_score(&theta, observations)?;
        Ok((theta, ll, free.iter().map(|&i| g[i]).collect()))
    };

    let (mut theta, mut ll, mut grad) = eval(&u)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        let gnorm = norm(&grad);
        if gnorm < options.tolerance || free.is_empty() {
            converged = true;
            break;
        }
        iterations += 1;

        let info = kalman_observed_information(&theta, observations)?;
        let k = free.len();
        let h = DMatrix::from_fn(k, k, |a, b| info[free[a] * DIM + free[b]]);
        let g = DVector::from_column_slice(&grad);
        let newton = h.cholesky().map(|c| c.solve(&g));
        let (direction, is_newton): (Vec<f64>, bool) = match newton {
            Some(d) => (d.iter().copied().collect(), true),
            None => (grad.iter().map(|x| x / (1.0 + gnorm)).collect(), false),
        };
        let slope: f64 = direction.iter().zip(&grad).map(|(a, b)| a * b).sum();

        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-14 {
            let mut trial = u.clone();
            for (a, &i) in free.iter().enumerate() {
                trial[i] = LinearGaussian.params()[i]
                    .constraint
                    .clamp_unconstrained(u[i] + step * direction[a]);
            }
            let (t_theta, t_ll, t_grad) = eval(&trial)?;
            let armijo = t_ll >= ll + 1e-4 * step * slope;
            // Near the optimum the predicted gain falls below the rounding
            // error of the log-likelihood; accept full Newton steps that shrink
            // the score without a measurable loss.
            let flat = is_newton
                && step == 1.0
                && norm(&t_grad) < gnorm
                && t_ll >= ll - 1e-12 * (1.0 + ll.abs());
            if armijo || flat {
                accepted = Some((trial, t_theta, t_ll, t_grad));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((nu, nt, nll, ng)) => {
                u = nu;
                theta = nt;
                ll = nll;
                grad = ng;
            }
            None => break,
        }
    }
    let score_norm = norm(&grad);
    Ok(MleFit {
        theta,
        loglik: ll,
        score_norm,
        iterations,
        converged: converged || score_norm < options.tolerance,
    })
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum::<f64>())
}
