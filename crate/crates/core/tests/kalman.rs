use hmmic_core::kalman::{
    kalman_loglik, kalman_mle, kalman_observed_information, kalman_score, MleOptions,
};
use hmmic_core::models::{simulate, HmmModel, LinearGaussian, Theta};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Log-density of `y` under the joint Gaussian law of the stationary model.
fn dense_loglik(theta: &[f64], y: &[f64]) -> f64 {
    let (phi, sx, sv) = (theta[0], theta[1], theta[2]);
    let n = y.len();
    let var = sx * sx / (1.0 - phi * phi);
    let cov = DMatrix::from_fn(n, n, |i, j| {
        let lag = (i as i32 - j as i32).unsigned_abs() as i32;
        var * phi.powi(lag) + if i == j { sv * sv } else { 0.0 }
    });
    let chol = cov.cholesky().expect("covariance is positive definite");
    let y = DVector::from_column_slice(y);
    let z = chol.l().solve_lower_triangular(&y).unwrap();
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + z.norm_squared())
}

fn fd_score(theta: &[f64], y: &[f64]) -> Vec<f64> {
    (0..3)
        .map(|i| {
            let h = 1e-6;
            let mut up = theta.to_vec();
            let mut dn = theta.to_vec();
            up[i] += h;
            dn[i] -= h;
            (kalman_loglik(&up, y).unwrap() - kalman_loglik(&dn, y).unwrap()) / (2.0 * h)
        })
        .collect()
}

fn theta_strategy() -> impl Strategy<Value = Vec<f64>> {
    (-0.95..0.95f64, 0.3..2.0f64, 0.3..2.0f64).prop_map(|(a, b, c)| vec![a, b, c])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn matches_dense_joint_gaussian(theta in theta_strategy(), y in prop::collection::vec(-4.0..4.0f64, 5)) {
        let a = kalman_loglik(&theta, &y).unwrap();
        let b = dense_loglik(&theta, &y);
        prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn score_matches_finite_differences(theta in theta_strategy(), y in prop::collection::vec(-4.0..4.0f64, 1..30)) {
        let score = kalman_score(&theta, &y).unwrap();
        let fd = fd_score(&theta, &y);
        let diff = score.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let size = fd.iter().map(|b| b * b).sum::<f64>().sqrt().max(1.0);
        prop_assert!(diff / size < 1e-6, "{score:?} vs {fd:?}");
    }
}

#[test]
fn dense_oracle_on_longer_series() {
    let theta = [0.9, 0.3f64.sqrt(), 1.0];
    let tr = simulate(&LinearGaussian, &Theta::new(theta.to_vec()), 200, 5).unwrap();
    let a = kalman_loglik(&theta, &tr.observations).unwrap();
    let b = dense_loglik(&theta, &tr.observations);
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
}

#[test]
fn phi_score_at_zero_for_single_observation() {
    let theta = [0.0, 0.8, 1.3];
    let y = [0.7];
    let score = kalman_score(&theta, &y).unwrap();
    let fd = fd_score(&theta, &y);
    assert!(score[0].abs() < 1e-12);
    assert!((score[0] - fd[0]).abs() < 1e-8);
}

#[test]
fn mle_recovers_truth_within_standard_errors() {
    let truth = Theta::new(vec![0.9, 0.3f64.sqrt(), 1.0]);
    let tr = simulate(&LinearGaussian, &truth, 10_000, 17).unwrap();
    let fit = kalman_mle(
        &tr.observations,
        &Theta::new(vec![0.5, 1.0, 0.5]),
        &MleOptions::default(),
    )
    .unwrap();
    assert!(fit.converged, "{fit:?}");
    assert!(fit.score_norm < 1e-8);

    // Standard errors in unconstrained coordinates from the observed information.
    let info = kalman_observed_information(&fit.theta, &tr.observations).unwrap();
    let cov = DMatrix::from_row_slice(3, 3, &info).try_inverse().unwrap();
    let u_hat = LinearGaussian.to_unconstrained(&fit.theta).unwrap();
    let u_true = LinearGaussian.to_unconstrained(&truth).unwrap();
    for i in 0..3 {
        let se = cov[(i, i)].sqrt();
        assert!(
            (u_hat[i] - u_true[i]).abs() < 3.0 * se,
            "coordinate {i}: {} vs {} (se {se})",
            u_hat[i],
            u_true[i]
        );
    }
}

#[test]
fn mle_started_at_truth_converges() {
    let truth = Theta::new(vec![0.9, 0.3f64.sqrt(), 1.0]);
    let tr = simulate(&LinearGaussian, &truth, 2_000, 3).unwrap();
    let fit = kalman_mle(&tr.observations, &truth, &MleOptions::default()).unwrap();
    assert!(fit.converged);
    let score = kalman_score(&fit.theta, &tr.observations).unwrap();
    let jac = LinearGaussian.jacobian(&fit.theta);
    let norm = score
        .iter()
        .zip(&jac)
        .map(|(g, j)| (g * j).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(norm < 1e-8, "{norm}");
    assert!(fit.loglik >= kalman_loglik(&truth, &tr.observations).unwrap());
}

#[test]
fn nested_fits_are_dominated() {
    let truth = Theta::new(vec![0.9, 0.3f64.sqrt(), 1.0]);
    for seed in 0..4 {
        let tr = simulate(&LinearGaussian, &truth, 3_000, 100 + seed).unwrap();
        let full = kalman_mle(&tr.observations, &truth, &MleOptions::default()).unwrap();
        let frozen = MleOptions {
            free: [false, true, true],
            ..MleOptions::default()
        };
        let restricted = kalman_mle(&tr.observations, &truth, &frozen).unwrap();
        assert_eq!(restricted.theta[0], 0.9);
        assert!(full.loglik - restricted.loglik >= -1e-6, "seed {seed}");
    }
}

#[test]
fn invalid_inputs() {
    assert!(kalman_loglik(&[1.0, 0.5, 0.5], &[0.0]).is_err());
    assert!(kalman_loglik(&[0.5, 0.0, 0.5], &[0.0]).is_err());
    assert!(kalman_mle(
        &[0.1, 0.2],
        &Theta::new(vec![0.5, 1.0, 1.0]),
        &MleOptions::default()
    )
    .is_err());
}
