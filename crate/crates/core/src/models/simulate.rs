use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{params, HmmModel, ObservationNoise, Theta, TransitionKernel};
use crate::rng::{standard_normal, uniform, StepRng};
use crate::{Error, Result};

/// A simulated realisation `(x_t, y_t)` for `t = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<f64>,
    pub observations: Vec<f64>,
    pub seed: u64,
    pub model: String,
    pub theta: Theta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Simulates `n` steps of `model` at `theta`.
///
/// Step `t` reads `(W_t, V_t, q_t, J_t)` from its own stream in that order,
/// whether or not the model uses every draw; at `t = 0` the `W` draw feeds the
/// initial law. Scales may be zero and probabilities may sit on `{0, 1}`
/// here, so degenerate sub-models can be simulated.
pub fn simulate<M: HmmModel + ?Sized>(
    model: &M,
    theta: &Theta,
    n: usize,
    seed: u64,
) -> Result<Trajectory> {
    params::check_closed(model.params(), theta)?;
    if n == 0 {
        return Err(Error::InvalidInput("trajectory length must be at least 1"));
    }
    let kernel = model.transition_kernel(theta);
    let mut rng = StepRng::new(seed);
    let mut states = Vec::with_capacity(n);
    let mut observations = Vec::with_capacity(n);
    let mut x = 0.0;
    for t in 0..n {
        let stream = rng.at_step(t);
        let w = standard_normal(stream);
        let noise = ObservationNoise {
            v: standard_normal(stream),
            u: uniform(stream),
            j: standard_normal(stream),
        };
        x = if t == 0 {
            model.initial_state(theta, w)
        } else {
            kernel.propagate(x, w)
        };
        states.push(x);
        observations.push(model.emit(theta, x, &noise));
    }
    Ok(Trajectory {
        states,
        observations,
        seed,
        model: model.name().to_string(),
        theta: theta.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{StochasticVolatility, StochasticVolatilityJumps};
    use alloc::vec;

    #[test]
    fn zero_state_noise_keeps_states_at_zero() {
        let tr = simulate(&StochasticVolatility, &Theta::new(vec![0.9, 0.0]), 5, 11).unwrap();
        assert!(tr.states.iter().all(|&x| x == 0.0));
        assert_eq!(tr.observations.len(), 5);
        // With X ≡ 0 the observations are the V draws themselves.
        let mut rng = StepRng::new(11);
        for (t, y) in tr.observations.iter().enumerate() {
            let s = rng.at_step(t);
            let _w = standard_normal(s);
            assert_eq!(*y, standard_normal(s));
        }
    }

    #[test]
    fn svj_without_jumps_reproduces_sv() {
        let sv = simulate(
            &StochasticVolatility,
            &Theta::new(vec![0.9, 0.3f64.sqrt()]),
            200,
            5,
        )
        .unwrap();
        let svj = simulate(
            &StochasticVolatilityJumps,
            &Theta::new(vec![0.9, 0.3f64.sqrt(), 0.6f64.sqrt(), 0.0]),
            200,
            5,
        )
        .unwrap();
        assert_eq!(sv.states, svj.states);
        assert_eq!(sv.observations, svj.observations);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(simulate(&StochasticVolatility, &Theta::new(vec![1.0, 0.5]), 5, 0).is_err());
        assert!(simulate(&StochasticVolatility, &Theta::new(vec![0.5, -0.1]), 5, 0).is_err());
        assert!(simulate(&StochasticVolatility, &Theta::new(vec![0.5, 0.5]), 0, 0).is_err());
    }

    #[test]
    fn reproducible_for_a_seed() {
        let theta = Theta::new(vec![0.9, 0.3f64.sqrt(), 0.6f64.sqrt(), 0.6]);
        let a = simulate(&StochasticVolatilityJumps, &theta, 100, 99).unwrap();
        let b = simulate(&StochasticVolatilityJumps, &theta, 100, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate(&StochasticVolatilityJumps, &theta, 100, 100).unwrap();
        assert_ne!(a.observations, c.observations);
    }
}
