use super::{
    normal_log_density, Ar1Kernel, Constraint, HmmModel, InitialLaw, ObservationNoise, ParamSpec,
};

const PARAMS: [ParamSpec; 3] = [
    ParamSpec::new("phi", Constraint::Stationary),
    ParamSpec::new("sigma_x", Constraint::Positive),
    ParamSpec::new("sigma_v", Constraint::Positive),
];

/// `X_t = φ X_{t-1} + σ_X W_t`, `Y_t = X_t + σ_V V_t`, θ = (φ, σ_X, σ_V).
///
/// `X_0` follows the stationary law `N(0, σ_X² / (1 - φ²))`, which makes the
/// Kalman filter in [`crate::kalman`] exact from the first observation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinearGaussian;

impl LinearGaussian {
    pub fn stationary_variance(phi: f64, sigma_x: f64) -> f64 {
        sigma_x * sigma_x / (1.0 - phi * phi)
    }
}

impl HmmModel for LinearGaussian {
    type Kernel = Ar1Kernel;

    fn name(&self) -> &str {
        "lg"
    }

    fn params(&self) -> &[ParamSpec] {
        &PARAMS
    }

    fn transition_kernel(&self, theta: &[f64]) -> Ar1Kernel {
        Ar1Kernel::new(theta[0], theta[1], 0, 1)
    }

    fn log_g(&self, theta: &[f64], y: f64, x: f64) -> f64 {
        normal_log_density(y, x, theta[2] * theta[2])
    }

    fn grad_log_g(&self, theta: &[f64], y: f64, x: f64, grad: &mut [f64]) {
        let s = theta[2];
        let r = y - x;
        grad[0] = 0.0;
        grad[1] = 0.0;
        grad[2] = (r * r / (s * s) - 1.0) / s;
    }

    fn initial_law(&self, theta: &[f64]) -> InitialLaw {
        InitialLaw::Gaussian {
            mean: 0.0,
            var: Self::stationary_variance(theta[0], theta[1]),
        }
    }

    fn grad_log_initial(&self, theta: &[f64], x: f64, grad: &mut [f64]) {
        let (phi, sigma) = (theta[0], theta[1]);
        let one_m = 1.0 - phi * phi;
        let var = sigma * sigma / one_m;
        let dlog_dvar = 0.5 * (x * x / var - 1.0) / var;
        grad[0] = dlog_dvar * 2.0 * phi * sigma * sigma / (one_m * one_m);
        grad[1] = dlog_dvar * 2.0 * sigma / one_m;
        grad[2] = 0.0;
    }

    fn emit(&self, theta: &[f64], x: f64, noise: &ObservationNoise) -> f64 {
        x + theta[2] * noise.v
    }
}
