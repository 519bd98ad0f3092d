use hmmic_core::kalman::{kalman_loglik, kalman_score};
use hmmic_core::models::{
    normal_log_density, simulate, Ar1Kernel, Constraint, HmmModel, InitialLaw, LinearGaussian,
    ObservationNoise, ParamSpec, StochasticVolatility, StochasticVolatilityJumps, Theta,
};
use hmmic_core::smc::{
    bootstrap_step, run_filter, score_step, FilterConfig, ParticleFilter, ParticleState,
    ResampleScheme,
};
use hmmic_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// AR(1) states with observations `N(0, s²)` that ignore the state.
struct Blind;

const BLIND_PARAMS: [ParamSpec; 3] = [
    ParamSpec::new("phi", Constraint::Stationary),
    ParamSpec::new("sigma_x", Constraint::Positive),
    ParamSpec::new("s", Constraint::Positive),
];

impl HmmModel for Blind {
    type Kernel = Ar1Kernel;

    fn name(&self) -> &str {
        "blind"
    }

    fn params(&self) -> &[ParamSpec] {
        &BLIND_PARAMS
    }

    fn transition_kernel(&self, theta: &[f64]) -> Ar1Kernel {
        Ar1Kernel::new(theta[0], theta[1], 0, 1)
    }

    fn log_g(&self, theta: &[f64], y: f64, _x: f64) -> f64 {
        normal_log_density(y, 0.0, theta[2] * theta[2])
    }

    fn grad_log_g(&self, theta: &[f64], y: f64, _x: f64, grad: &mut [f64]) {
        grad.fill(0.0);
        grad[2] = (y * y / (theta[2] * theta[2]) - 1.0) / theta[2];
    }

    fn initial_law(&self, _theta: &[f64]) -> InitialLaw {
        InitialLaw::Gaussian {
            mean: 0.0,
            var: 1.0,
        }
    }

    fn emit(&self, theta: &[f64], _x: f64, noise: &ObservationNoise) -> f64 {
        theta[2] * noise.v
    }
}

fn lg_truth() -> Theta {
    Theta::new(vec![0.9, 0.3f64.sqrt(), 1.0])
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn state_independent_observations_give_exact_likelihood() {
    let theta = [0.7, 0.9, 1.4];
    let y = simulate(&Blind, &Theta::new(theta.to_vec()), 60, 8)
        .unwrap()
        .observations;
    let exact: f64 = y.iter().map(|&v| Blind.log_g(&theta, v, 0.0)).sum();
    for particles in [1, 7, 100] {
        for scheme in [ResampleScheme::Systematic, ResampleScheme::Multinomial] {
            for threshold in [0.5, 1.0, 2.0] {
                for seed in 0..3 {
                    let config = FilterConfig {
                        particles,
                        scheme,
                        resample_threshold: threshold,
                        track_score: seed == 0,
                    };
                    let out = run_filter(&Blind, &theta, &y, &config, seed).unwrap();
                    assert!(
                        (out.loglik - exact).abs() < 1e-10,
                        "N={particles} {scheme:?} threshold={threshold}: {} vs {exact}",
                        out.loglik
                    );
                }
            }
        }
    }
}

#[test]
fn single_particle_increment_is_observation_density() {
    let theta = [0.8, 0.6];
    let y = simulate(&StochasticVolatility, &Theta::new(theta.to_vec()), 30, 1)
        .unwrap()
        .observations;
    let mut filter =
        ParticleFilter::new(&StochasticVolatility, FilterConfig::with_particles(1), 4).unwrap();
    for &v in &y {
        let inc = filter.assimilate(&theta, v).unwrap();
        let x = filter.state().unwrap().particles[0];
        assert!((inc - StochasticVolatility.log_g(&theta, v, x)).abs() < 1e-12);
    }
}

#[test]
fn weights_stay_normalised_and_ess_in_range() {
    let theta = [0.9, 0.3f64.sqrt(), 0.6f64.sqrt(), 0.6];
    let y = simulate(
        &StochasticVolatilityJumps,
        &Theta::new(theta.to_vec()),
        300,
        6,
    )
    .unwrap()
    .observations;
    let n = 150;
    let mut filter = ParticleFilter::new(
        &StochasticVolatilityJumps,
        FilterConfig::with_particles(n).tracking_score(),
        2,
    )
    .unwrap();
    for &v in &y {
        filter.assimilate(&theta, v).unwrap();
        let state = filter.state().unwrap();
        let sum: f64 = state.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(state.weights.iter().all(|&w| w >= 0.0));
        assert!(state.alphas.as_ref().unwrap().iter().all(|a| a.is_finite()));
    }
    assert_eq!(filter.ess_trace().len(), y.len());
    assert!(filter
        .ess_trace()
        .iter()
        .all(|&e| (1.0 - 1e-9..=n as f64 + 1e-9).contains(&e)));
    assert!(filter.resample_count() > 0);
}

#[test]
fn identical_inputs_give_identical_output() {
    let theta = [0.9, 0.3f64.sqrt()];
    let y = simulate(&StochasticVolatility, &Theta::new(theta.to_vec()), 200, 12)
        .unwrap()
        .observations;
    let config = FilterConfig::with_particles(300).tracking_score();
    let a = run_filter(&StochasticVolatility, &theta, &y, &config, 77).unwrap();
    let b = run_filter(&StochasticVolatility, &theta, &y, &config, 77).unwrap();
    assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
    assert_eq!(a, b);
    let c = run_filter(&StochasticVolatility, &theta, &y, &config, 78).unwrap();
    assert_ne!(a.loglik, c.loglik);
}

#[test]
fn particle_order_does_not_matter() {
    let theta = lg_truth();
    let y = simulate(&LinearGaussian, &theta, 80, 5)
        .unwrap()
        .observations;
    let config = FilterConfig::with_particles(64).tracking_score();
    let d = 3;
    let mut filter = ParticleFilter::new(&LinearGaussian, config.clone(), 9).unwrap();
    for &v in &y[..40] {
        filter.assimilate(&theta, v).unwrap();
    }
    let state = filter.state().unwrap().clone();

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut perm: Vec<usize> = (0..state.len()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let alphas = state.alphas.as_ref().unwrap();
    let permuted = ParticleState {
        particles: perm.iter().map(|&i| state.particles[i]).collect(),
        log_weights: perm.iter().map(|&i| state.log_weights[i]).collect(),
        weights: perm.iter().map(|&i| state.weights[i]).collect(),
        alphas: Some(
            perm.iter()
                .flat_map(|&i| alphas[i * d..(i + 1) * d].to_vec())
                .collect(),
        ),
        loglik: state.loglik,
        t: state.t,
    };

    let mut a = ParticleFilter::from_state(&LinearGaussian, config.clone(), 9, state).unwrap();
    let mut b = ParticleFilter::from_state(&LinearGaussian, config, 9, permuted).unwrap();
    for &v in &y[40..] {
        a.assimilate(&theta, v).unwrap();
        b.assimilate(&theta, v).unwrap();
    }
    assert!((a.loglik() - b.loglik()).abs() < 1e-12);
    for (x, z) in a.score().unwrap().iter().zip(b.score().unwrap()) {
        assert!((x - z).abs() < 1e-12);
    }
}

#[test]
fn bootstrap_step_matches_filter_step() {
    let theta = lg_truth();
    let y = simulate(&LinearGaussian, &theta, 10, 2)
        .unwrap()
        .observations;
    let config = FilterConfig::with_particles(50).tracking_score();
    let mut filter = ParticleFilter::new(&LinearGaussian, config.clone(), 31).unwrap();
    filter.assimilate(&theta, y[0]).unwrap();
    let mut state = filter.state().unwrap().clone();
    for &v in &y[1..] {
        filter.assimilate(&theta, v).unwrap();
        state = bootstrap_step(state, v, &LinearGaussian, &theta, 31, &config).unwrap();
        assert_eq!(&state, filter.state().unwrap());
    }
}

#[test]
fn impossible_observation_is_a_degenerate_filter() {
    // A point mass at zero cannot explain a huge observation once all weights underflow.
    let theta = [0.5, 1e-3];
    let err = run_filter(
        &StochasticVolatility,
        &theta,
        &[0.1, 1e200],
        &FilterConfig::with_particles(10),
        0,
    )
    .unwrap_err();
    assert!(matches!(err, Error::DegenerateFilter { t: 1 }), "{err:?}");
}

#[test]
fn linear_gaussian_loglik_matches_kalman() {
    let theta = lg_truth();
    let y = simulate(&LinearGaussian, &theta, 200, 40)
        .unwrap()
        .observations;
    let exact = kalman_loglik(&theta, &y).unwrap();
    let values: Vec<f64> = (0..20)
        .map(|s| {
            run_filter(
                &LinearGaussian,
                &theta,
                &y,
                &FilterConfig::with_particles(5000),
                s,
            )
            .unwrap()
            .loglik
        })
        .collect();
    let (mean, se) = mean_and_se(&values);
    assert!(
        (mean - exact).abs() < 3.0 * se,
        "{mean} vs {exact} (se {se})"
    );
}

#[test]
fn linear_gaussian_score_matches_kalman() {
    let theta = lg_truth();
    let y = simulate(&LinearGaussian, &theta, 100, 41)
        .unwrap()
        .observations;
    let exact = kalman_score(&theta, &y).unwrap();
    let config = FilterConfig::with_particles(1000).tracking_score();
    let runs: Vec<Vec<f64>> = (0..10)
        .map(|s| {
            run_filter(&LinearGaussian, &theta, &y, &config, s)
                .unwrap()
                .score
                .unwrap()
        })
        .collect();
    for c in 0..3 {
        let v: Vec<f64> = runs.iter().map(|r| r[c]).collect();
        let (mean, se) = mean_and_se(&v);
        assert!(
            (mean - exact[c]).abs() < 3.0 * se,
            "component {c}: {mean} vs {} (se {se})",
            exact[c]
        );
    }
}

#[test]
fn sv_score_matches_common_random_number_differences() {
    let theta = [0.9, 0.3f64.sqrt()];
    let y = simulate(&StochasticVolatility, &Theta::new(theta.to_vec()), 200, 13)
        .unwrap()
        .observations;
    let config = FilterConfig::with_particles(500).tracking_score();
    let plain = FilterConfig::with_particles(500);
    let h = 1e-3;
    let mut scores = vec![Vec::new(); 2];
    let mut diffs = vec![Vec::new(); 2];
    for seed in 0..20 {
        let s = run_filter(&StochasticVolatility, &theta, &y, &config, seed)
            .unwrap()
            .score
            .unwrap();
        for c in 0..2 {
            let mut up = theta;
            let mut dn = theta;
            up[c] += h;
            dn[c] -= h;
            let lu = run_filter(&StochasticVolatility, &up, &y, &plain, seed)
                .unwrap()
                .loglik;
            let ld = run_filter(&StochasticVolatility, &dn, &y, &plain, seed)
                .unwrap()
                .loglik;
            scores[c].push(s[c]);
            diffs[c].push((lu - ld) / (2.0 * h));
        }
    }
    for c in 0..2 {
        let (ms, ss) = mean_and_se(&scores[c]);
        let (md, sd) = mean_and_se(&diffs[c]);
        let combined = (ss * ss + sd * sd).sqrt();
        assert!(
            (ms - md).abs() < 3.0 * combined,
            "component {c}: {ms} vs {md} (se {combined})"
        );
    }
}

/// Direct transcription of the weighted-average recursion.
fn naive_score_step<M: HmmModel>(
    model: &M,
    theta: &[f64],
    prev: &ParticleState,
    new: &[f64],
    y: f64,
) -> Vec<f64> {
    let d = model.dim();
    let alphas = prev.alphas.as_ref().unwrap();
    let mut out = Vec::with_capacity(new.len() * d);
    let mut gq = vec![0.0; d];
    let mut gg = vec![0.0; d];
    for &x in new {
        let logs: Vec<f64> = prev
            .particles
            .iter()
            .zip(&prev.weights)
            .map(|(&xp, &w)| w.ln() + model.log_q(theta, xp, x))
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mix: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = mix.iter().sum();
        model.grad_log_g(theta, y, x, &mut gg);
        let mut row = vec![0.0; d];
        for (j, &xp) in prev.particles.iter().enumerate() {
            model.grad_log_q(theta, xp, x, &mut gq);
            for c in 0..d {
                row[c] += mix[j] / total * (gg[c] + gq[c] + alphas[j * d + c]);
            }
        }
        out.extend(row);
    }
    out
}

fn random_state(rng: &mut ChaCha8Rng, n: usize, d: usize, spread: f64) -> ParticleState {
    let particles: Vec<f64> = (0..n)
        .map(|_| spread * (rng.random::<f64>() - 0.5))
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    ParticleState {
        log_weights: weights.iter().map(|w| w.ln()).collect(),
        weights,
        alphas: Some(
            (0..n * d)
                .map(|_| 4.0 * (rng.random::<f64>() - 0.5))
                .collect(),
        ),
        particles,
        loglik: 0.0,
        t: 3,
    }
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, z) in a.iter().zip(b) {
        assert!((x - z).abs() <= tol * z.abs().max(1.0), "{x} vs {z}");
    }
}

#[test]
fn score_step_matches_naive_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let lg = [0.9, 0.3f64.sqrt(), 1.0];
    let svj = [0.9, 0.3f64.sqrt(), 0.6f64.sqrt(), 0.6];
    for &(n, spread) in &[
        (1, 1.0),
        (5, 2.0),
        (60, 3.0),
        (400, 4.0),
        (2000, 5.0),
        (2000, 0.2),
    ] {
        let prev = random_state(&mut rng, n, 3, spread);
        let new: Vec<f64> = (0..n)
            .map(|_| spread * (rng.random::<f64>() - 0.5))
            .collect();
        let got = score_step(&LinearGaussian, &lg, &prev, &new, 0.4).unwrap();
        assert_close(
            &got,
            &naive_score_step(&LinearGaussian, &lg, &prev, &new, 0.4),
            1e-12,
        );

        let prev = random_state(&mut rng, n, 4, spread);
        let got = score_step(&StochasticVolatilityJumps, &svj, &prev, &new, -1.3).unwrap();
        assert_close(
            &got,
            &naive_score_step(&StochasticVolatilityJumps, &svj, &prev, &new, -1.3),
            1e-12,
        );
    }
}

#[test]
fn single_particle_score_step_adds_gradients() {
    let theta = [0.9, 0.3f64.sqrt(), 1.0];
    let prev = ParticleState {
        particles: vec![0.4],
        log_weights: vec![0.0],
        weights: vec![1.0],
        alphas: Some(vec![0.5, -1.0, 2.0]),
        loglik: -3.0,
        t: 0,
    };
    let got = score_step(&LinearGaussian, &theta, &prev, &[1.1], 0.3).unwrap();
    let (_, gq) = LinearGaussian.eval_transition(&theta, 0.4, 1.1).unwrap();
    let (_, gg) = LinearGaussian.eval_observation(&theta, 0.3, 1.1).unwrap();
    let expected: Vec<f64> = (0..3)
        .map(|c| prev.alphas.as_ref().unwrap()[c] + gq[c] + gg[c])
        .collect();
    assert_close(&got, &expected, 1e-14);
}

#[test]
fn score_step_requires_tags() {
    let prev = ParticleState {
        particles: vec![0.0],
        log_weights: vec![0.0],
        weights: vec![1.0],
        alphas: None,
        loglik: 0.0,
        t: 0,
    };
    assert!(score_step(&LinearGaussian, &[0.5, 1.0, 1.0], &prev, &[0.0], 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn score_step_agrees_with_reference_on_random_clouds(seed: u64, n in 1usize..300, spread in 0.01..20.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = [0.95, 0.4, 0.8];
        let prev = random_state(&mut rng, n, 3, spread);
        let new: Vec<f64> = (0..n).map(|_| spread * (rng.random::<f64>() - 0.5)).collect();
        let got = score_step(&LinearGaussian, &theta, &prev, &new, 1.0).unwrap();
        let want = naive_score_step(&LinearGaussian, &theta, &prev, &new, 1.0);
        for (x, z) in got.iter().zip(&want) {
            prop_assert!((x - z).abs() <= 1e-12 * z.abs().max(1.0), "{x} vs {z}");
        }
    }

    #[test]
    fn filter_invariants_hold(seed: u64, n in 1usize..120) {
        let theta = [0.9, 0.3f64.sqrt()];
        let y = simulate(&StochasticVolatility, &Theta::new(theta.to_vec()), 25, seed).unwrap().observations;
        let out = run_filter(&StochasticVolatility, &theta, &y, &FilterConfig::with_particles(n).tracking_score(), seed).unwrap();
        prop_assert!(out.loglik.is_finite());
        prop_assert!(out.ess_trace.iter().all(|&e| e >= 1.0 - 1e-9 && e <= n as f64 + 1e-9));
        prop_assert!(out.score.unwrap().iter().all(|s| s.is_finite()));
    }
}
