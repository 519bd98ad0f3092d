//! Parametric hidden Markov models on a scalar state.
//!
//! A model supplies the transition density `q_θ(x | x_prev)`, the observation
//! density `g_θ(y | x)`, the initial law of `X_0`, their log-gradients with
//! respect to θ, and deterministic maps from standard noise to samples. The
//! noise maps let [`simulate`] consume a fixed bundle of draws per time step
//! whatever the model.

use alloc::vec::Vec;

use crate::{Error, Result};

mod gaussian;
mod params;
mod simulate;
mod sv;

pub use gaussian::LinearGaussian;
pub use params::{Constraint, ParamSpec, Theta};
pub use simulate::{simulate, Trajectory};
pub use sv::{StochasticVolatility, StochasticVolatilityJumps};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Log-density of `N(mean, var)` at `x`.
pub fn normal_log_density(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * (LN_2PI + libm::log(var) + r * r / var)
}

/// Law of the initial state `X_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLaw {
    Point(f64),
    Gaussian { mean: f64, var: f64 },
}

/// Standard noise consumed to emit one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationNoise {
    /// Standard normal.
    pub v: f64,
    /// Uniform on `[0, 1)`, used for the jump indicator.
    pub u: f64,
    /// Standard normal, used for the jump size.
    pub j: f64,
}

/// Transition density evaluated at a fixed θ.
pub trait TransitionKernel {
    /// `log q(x | x_prev)`.
    fn log_density(&self, x_prev: f64, x: f64) -> f64;

    /// `log q(x | x_prev)` up to an additive constant that depends on θ only.
    fn log_kernel(&self, x_prev: f64, x: f64) -> f64 {
        self.log_density(x_prev, x)
    }

    /// `grad += weight · ∇_θ log q(x | x_prev)`.
    fn add_grad(&self, x_prev: f64, x: f64, weight: f64, grad: &mut [f64]);

    /// `grad += Σ_j weights_j · ∇_θ log q(x | prev_j)`.
    fn add_grad_sum(&self, prev: &[f64], weights: &[f64], x: f64, grad: &mut [f64]) {
        for (&xp, &w) in prev.iter().zip(weights) {
            self.add_grad(xp, x, w, grad);
        }
    }

    /// Maps a standard normal draw to a sample of `X_t | X_{t-1} = x_prev`.
    fn propagate(&self, x_prev: f64, noise: f64) -> f64;

    /// The kernel as a Gaussian AR(1) transition, when it is one. Enables the
    /// binned summation in the particle score recursion.
    fn as_ar1(&self) -> Option<&Ar1Kernel> {
        None
    }
}

/// `X_t = φ X_{t-1} + σ W_t` with `W_t ~ N(0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct Ar1Kernel {
    phi: f64,
    sigma: f64,
    inv_sigma: f64,
    inv_var: f64,
    log_norm: f64,
    phi_index: usize,
    sigma_index: usize,
}

impl Ar1Kernel {
    pub fn new(phi: f64, sigma: f64, phi_index: usize, sigma_index: usize) -> Self {
        Self {
            phi,
            sigma,
            inv_sigma: 1.0 / sigma,
            inv_var: 1.0 / (sigma * sigma),
            log_norm: -0.5 * LN_2PI - libm::log(sigma),
            phi_index,
            sigma_index,
        }
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `grad += Σ_j w_j ∇_θ log q(x | x'_j)` from `Σ w_j`, `Σ w_j r_j x'_j`
    /// and `Σ w_j r_j²`, where `r_j = x - φ x'_j`.
    pub(crate) fn add_grad_moments(&self, total: f64, r_xprev: f64, r_sq: f64, grad: &mut [f64]) {
        grad[self.phi_index] += r_xprev * self.inv_var;
        grad[self.sigma_index] += (r_sq * self.inv_var - total) * self.inv_sigma;
    }
}

impl TransitionKernel for Ar1Kernel {
    #[inline]
    fn log_density(&self, x_prev: f64, x: f64) -> f64 {
        self.log_norm + self.log_kernel(x_prev, x)
    }

    #[inline]
    fn log_kernel(&self, x_prev: f64, x: f64) -> f64 {
        let r = x - self.phi * x_prev;
        -0.5 * r * r * self.inv_var
    }

    #[inline]
    fn add_grad(&self, x_prev: f64, x: f64, weight: f64, grad: &mut [f64]) {
        let r = x - self.phi * x_prev;
        let wr = weight * r * self.inv_var;
        grad[self.phi_index] += wr * x_prev;
        grad[self.sigma_index] += (wr * r - weight) * self.inv_sigma;
    }

    fn add_grad_sum(&self, prev: &[f64], weights: &[f64], x: f64, grad: &mut [f64]) {
        let (mut total, mut rx, mut rr) = (0.0, 0.0, 0.0);
        for (&xp, &w) in prev.iter().zip(weights) {
            let r = x - self.phi * xp;
            total += w;
            rx += w * r * xp;
            rr += w * r * r;
        }
        self.add_grad_moments(total, rx, rr, grad);
    }

    #[inline]
    fn propagate(&self, x_prev: f64, noise: f64) -> f64 {
        self.phi * x_prev + self.sigma * noise
    }

    fn as_ar1(&self) -> Option<&Ar1Kernel> {
        Some(self)
    }
}

/// A parametric HMM with scalar latent state and scalar observations.
///
/// Gradient methods overwrite their output slice, which must have length
/// [`HmmModel::dim`].
pub trait HmmModel {
    type Kernel: TransitionKernel;

    fn name(&self) -> &str;

    fn params(&self) -> &[ParamSpec];

    fn dim(&self) -> usize {
        self.params().len()
    }

    fn param_names(&self) -> Vec<&'static str> {
        self.params().iter().map(|p| p.name).collect()
    }

    fn transition_kernel(&self, theta: &[f64]) -> Self::Kernel;

    fn log_g(&self, theta: &[f64], y: f64, x: f64) -> f64;

    fn grad_log_g(&self, theta: &[f64], y: f64, x: f64, grad: &mut [f64]);

    fn initial_law(&self, theta: &[f64]) -> InitialLaw;

    /// `∇_θ log η_θ(x)`; zero for parameter-free initial laws.
    fn grad_log_initial(&self, _theta: &[f64], _x: f64, grad: &mut [f64]) {
        grad.fill(0.0);
    }

    /// Maps standard noise to a draw from `g_θ(· | x)`.
    fn emit(&self, theta: &[f64], x: f64, noise: &ObservationNoise) -> f64;

    fn log_q(&self, theta: &[f64], x_prev: f64, x: f64) -> f64 {
        self.transition_kernel(theta).log_density(x_prev, x)
    }

    fn grad_log_q(&self, theta: &[f64], x_prev: f64, x: f64, grad: &mut [f64]) {
        grad.fill(0.0);
        self.transition_kernel(theta).add_grad(x_prev, x, 1.0, grad);
    }

    fn initial_state(&self, theta: &[f64], noise: f64) -> f64 {
        match self.initial_law(theta) {
            InitialLaw::Point(x) => x,
            InitialLaw::Gaussian { mean, var } => mean + libm::sqrt(var) * noise,
        }
    }

    fn sample_transition<R: rand::Rng + ?Sized>(
        &self,
        theta: &[f64],
        x_prev: f64,
        rng: &mut R,
    ) -> f64 {
        let w = crate::rng::standard_normal(rng);
        self.transition_kernel(theta).propagate(x_prev, w)
    }

    fn sample_observation<R: rand::Rng + ?Sized>(&self, theta: &[f64], x: f64, rng: &mut R) -> f64 {
        let v = crate::rng::standard_normal(rng);
        let u = crate::rng::uniform(rng);
        let j = crate::rng::standard_normal(rng);
        self.emit(theta, x, &ObservationNoise { v, u, j })
    }

    /// Errors unless θ has the right length and lies in the open domain.
    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        params::check_interior(self.params(), theta)
    }

    fn to_unconstrained(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        Ok(self
            .params()
            .iter()
            .zip(theta)
            .map(|(p, &v)| p.constraint.to_unconstrained(v))
            .collect())
    }

    fn to_natural(&self, unconstrained: &[f64]) -> Result<Theta> {
        params::check_dimension(self.params(), unconstrained)?;
        Ok(Theta::new(
            self.params()
                .iter()
                .zip(unconstrained)
                .map(|(p, &u)| p.constraint.to_natural(u))
                .collect(),
        ))
    }

    /// Diagonal of `dθ/du` at the natural point θ.
    fn jacobian(&self, theta: &[f64]) -> Vec<f64> {
        self.params()
            .iter()
            .zip(theta)
            .map(|(p, &v)| p.constraint.jacobian(v))
            .collect()
    }

    /// `(log g_θ(y|x), ∇_θ log g_θ(y|x))`.
    fn eval_observation(&self, theta: &[f64], y: f64, x: f64) -> Result<(f64, Vec<f64>)> {
        self.check_theta(theta)?;
        let mut grad = alloc::vec![0.0; self.dim()];
        self.grad_log_g(theta, y, x, &mut grad);
        Ok((self.log_g(theta, y, x), grad))
    }

    /// `(log q_θ(x|x_prev), ∇_θ log q_θ(x|x_prev))`.
    fn eval_transition(&self, theta: &[f64], x_prev: f64, x: f64) -> Result<(f64, Vec<f64>)> {
        self.check_theta(theta)?;
        let mut grad = alloc::vec![0.0; self.dim()];
        self.grad_log_q(theta, x_prev, x, &mut grad);
        Ok((self.log_q(theta, x_prev, x), grad))
    }
}

/// One of the built-in models, selected at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnyModel {
    LinearGaussian(LinearGaussian),
    Sv(StochasticVolatility),
    Svj(StochasticVolatilityJumps),
}

impl AnyModel {
    /// Accepts `lg`, `sv` and `svj` (case-insensitive).
    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "lg" | "linear-gaussian" | "linear_gaussian" => {
                Ok(AnyModel::LinearGaussian(LinearGaussian))
            }
            "sv" => Ok(AnyModel::Sv(StochasticVolatility)),
            "svj" => Ok(AnyModel::Svj(StochasticVolatilityJumps)),
            _ => Err(Error::InvalidInput("unknown model name")),
        }
    }
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            AnyModel::LinearGaussian($m) => $e,
            AnyModel::Sv($m) => $e,
            AnyModel::Svj($m) => $e,
        }
    };
}

impl HmmModel for AnyModel {
    type Kernel = Ar1Kernel;

    fn name(&self) -> &str {
        dispatch!(self, m => m.name())
    }

    fn params(&self) -> &[ParamSpec] {
        dispatch!(self, m => m.params())
    }

    fn transition_kernel(&self, theta: &[f64]) -> Ar1Kernel {
        dispatch!(self, m => m.transition_kernel(theta))
    }

    fn log_g(&self, theta: &[f64], y: f64, x: f64) -> f64 {
        dispatch!(self, m => m.log_g(theta, y, x))
    }

    fn grad_log_g(&self, theta: &[f64], y: f64, x: f64, grad: &mut [f64]) {
        dispatch!(self, m => m.grad_log_g(theta, y, x, grad))
    }

    fn initial_law(&self, theta: &[f64]) -> InitialLaw {
        dispatch!(self, m => m.initial_law(theta))
    }

    fn grad_log_initial(&self, theta: &[f64], x: f64, grad: &mut [f64]) {
        dispatch!(self, m => m.grad_log_initial(theta, x, grad))
    }

    fn emit(&self, theta: &[f64], x: f64, noise: &ObservationNoise) -> f64 {
        dispatch!(self, m => m.emit(theta, x, noise))
    }
}
