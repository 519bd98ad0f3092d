use super::{
    normal_log_density, Ar1Kernel, Constraint, HmmModel, InitialLaw, ObservationNoise, ParamSpec,
};

const SV_PARAMS: [ParamSpec; 2] = [
    ParamSpec::new("phi", Constraint::Stationary),
    ParamSpec::new("sigma_x", Constraint::Positive),
];

const SVJ_PARAMS: [ParamSpec; 4] = [
    ParamSpec::new("phi", Constraint::Stationary),
    ParamSpec::new("sigma_x", Constraint::Positive),
    ParamSpec::new("sigma_j", Constraint::Positive),
    ParamSpec::new("p", Constraint::Probability),
];

/// Stochastic volatility: `X_t = φ X_{t-1} + σ_X W_t`, `Y_t = exp(X_t / 2) V_t`,
/// with `X_0 = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StochasticVolatility;

impl HmmModel for StochasticVolatility {
    type Kernel = Ar1Kernel;

    fn name(&self) -> &str {
        "sv"
    }

    fn params(&self) -> &[ParamSpec] {
        &SV_PARAMS
    }

    fn transition_kernel(&self, theta: &[f64]) -> Ar1Kernel {
        Ar1Kernel::new(theta[0], theta[1], 0, 1)
    }

    fn log_g(&self, _theta: &[f64], y: f64, x: f64) -> f64 {
        normal_log_density(y, 0.0, libm::exp(x))
    }

    fn grad_log_g(&self, _theta: &[f64], _y: f64, _x: f64, grad: &mut [f64]) {
        grad.fill(0.0);
    }

    fn initial_law(&self, _theta: &[f64]) -> InitialLaw {
        InitialLaw::Point(0.0)
    }

    fn emit(&self, _theta: &[f64], x: f64, noise: &ObservationNoise) -> f64 {
        libm::exp(0.5 * x) * noise.v
    }
}

/// SV with Bernoulli jumps: `Y_t = exp(X_t / 2) V_t + q_t J_t`,
/// `q_t ~ Bernoulli(p)`, `J_t ~ N(0, σ_J²)`; θ = (φ, σ_X, σ_J, p).
///
/// Marginalising `q_t` gives the observation density
/// `(1 - p) N(y; 0, e^x) + p N(y; 0, e^x + σ_J²)`. SV is the restriction
/// `p = 0` and occupies the leading block of θ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StochasticVolatilityJumps;

impl StochasticVolatilityJumps {
    /// Log-densities of the two mixture components including their weights.
    fn components(theta: &[f64], y: f64, x: f64) -> (f64, f64, f64, f64) {
        let (sigma_j, p) = (theta[2], theta[3]);
        let base = libm::exp(x);
        let jump = base + sigma_j * sigma_j;
        let l0 = libm::log(1.0 - p) + normal_log_density(y, 0.0, base);
        let l1 = libm::log(p) + normal_log_density(y, 0.0, jump);
        (l0, l1, base, jump)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(libm::exp(a - m) + libm::exp(b - m))
}

impl HmmModel for StochasticVolatilityJumps {
    type Kernel = Ar1Kernel;

    fn name(&self) -> &str {
        "svj"
    }

    fn params(&self) -> &[ParamSpec] {
        &SVJ_PARAMS
    }

    fn transition_kernel(&self, theta: &[f64]) -> Ar1Kernel {
        Ar1Kernel::new(theta[0], theta[1], 0, 1)
    }

    fn log_g(&self, theta: &[f64], y: f64, x: f64) -> f64 {
        let (l0, l1, _, _) = Self::components(theta, y, x);
        log_add_exp(l0, l1)
    }

    fn grad_log_g(&self, theta: &[f64], y: f64, x: f64, grad: &mut [f64]) {
        let (sigma_j, p) = (theta[2], theta[3]);
        let (l0, l1, _, jump) = Self::components(theta, y, x);
        let lg = log_add_exp(l0, l1);
        // Posterior probabilities of "no jump" / "jump".
        let r0 = libm::exp(l0 - lg);
        let r1 = libm::exp(l1 - lg);
        grad[0] = 0.0;
        grad[1] = 0.0;
        grad[2] = r1 * sigma_j * (y * y / jump - 1.0) / jump;
        grad[3] = r1 / p - r0 / (1.0 - p);
    }

    fn initial_law(&self, _theta: &[f64]) -> InitialLaw {
        InitialLaw::Point(0.0)
    }

    fn emit(&self, theta: &[f64], x: f64, noise: &ObservationNoise) -> f64 {
        let y = libm::exp(0.5 * x) * noise.v;
        if noise.u < theta[3] {
            y + theta[2] * noise.j
        } else {
            y
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LN_2PI;

    #[test]
    fn sv_observation_at_origin() {
        let (lg, grad) = StochasticVolatility
            .eval_observation(&[0.9, 0.5], 0.0, 0.0)
            .unwrap();
        assert!((lg + 0.5 * LN_2PI).abs() < 1e-15);
        assert_eq!(grad, [0.0, 0.0]);
    }

    #[test]
    fn svj_mixture_at_origin() {
        let theta = [0.9, 0.5, 0.6f64.sqrt(), 0.5];
        let (lg, _) = StochasticVolatilityJumps
            .eval_observation(&theta, 0.0, 0.0)
            .unwrap();
        let n = |var: f64| (-0.5 * LN_2PI - 0.5 * var.ln()).exp();
        let expected = (0.5 * n(1.0) + 0.5 * n(1.6)).ln();
        assert!((lg - expected).abs() < 1e-14);
    }

    #[test]
    fn sv_transition_standard_normal_at_zero() {
        let (lq, _) = StochasticVolatility
            .eval_transition(&[0.0, 1.0], 3.7, 0.0)
            .unwrap();
        assert!((lq + 0.5 * LN_2PI).abs() < 1e-15);
    }

    #[test]
    fn svj_without_jumps_matches_sv_log_g() {
        // p = 0 is on the boundary, so call the density directly.
        for &(x, y) in &[(0.0, 0.3), (-1.2, 2.5), (0.7, -0.01)] {
            let a = StochasticVolatility.log_g(&[0.9, 0.5], y, x);
            let b = StochasticVolatilityJumps.log_g(&[0.9, 0.5, 0.8, 0.0], y, x);
            assert_eq!(a, b);
        }
    }
}
