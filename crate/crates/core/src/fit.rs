//! Online gradient-ascent estimation.
//!
//! One particle filter runs through the data while θ moves: step `k`
//! assimilates `y_{k-1}` at the current iterate, the incremental score
//! `∇log p(y_{k-1} | y_{0:k-2})` is taken as the change of the particle score
//! estimate across that step, and
//!
//! ```text
//! u_{k} = u_{k-1} + γ_k · clip(J(θ)ᵀ · incremental score)
//! ```
//!
//! in unconstrained coordinates `u`, where `J` is the diagonal Jacobian of
//! the natural parameters. The final iterate is the MLE proxy; its
//! log-likelihood is re-estimated with a fresh filter.

use alloc::vec;
use alloc::vec::Vec;

use crate::models::{HmmModel, Theta};
use crate::rng::derive_seed;
use crate::smc::{run_filter, FilterConfig, ParticleFilter, ResampleScheme};
use crate::{Error, Result};

/// Seed offset used to derive the evaluation seed from the fit seed.
const EVAL_STREAM: u64 = 0x6576_616c;

/// Step sizes `γ_k = c · k^(-a)` with `a ∈ (1/2, 1]`, so that `Σγ_k = ∞` and
/// `Σγ_k² < ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    scale: f64,
    exponent: f64,
}

impl StepSchedule {
    pub fn new(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || !(exponent > 0.5 && exponent <= 1.0) {
            return Err(Error::InvalidSchedule { scale, exponent });
        }
        Ok(Self { scale, exponent })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// `γ_k` for `k ≥ 1`.
    pub fn step_size(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        self.scale * libm::pow(k as f64, -self.exponent)
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self {
            scale: 1.0,
            exponent: 2.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineOptions {
    pub particles: usize,
    pub schedule: StepSchedule,
    /// Norm bound on the unconstrained gradient.
    pub clip_norm: f64,
    /// Number of initial observations whose step sizes are damped.
    pub burn_in: usize,
    pub burn_in_factor: f64,
    pub resample_threshold: f64,
    pub scheme: ResampleScheme,
    /// Keep θ fixed; the filter still advances.
    pub frozen: bool,
}

impl Default for OnlineOptions {
    fn default() -> Self {
        Self {
            particles: 200,
            schedule: StepSchedule::default(),
            clip_norm: 10.0,
            burn_in: 100,
            burn_in_factor: 0.1,
            resample_threshold: 0.5,
            scheme: ResampleScheme::Systematic,
            frozen: false,
        }
    }
}

impl OnlineOptions {
    fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            particles: self.particles,
            scheme: self.scheme,
            resample_threshold: self.resample_threshold,
            track_score: true,
        }
    }

    fn gain(&self, k: usize) -> f64 {
        if self.frozen {
            return 0.0;
        }
        let g = self.schedule.step_size(k);
        if k <= self.burn_in {
            g * self.burn_in_factor
        } else {
            g
        }
    }
}

/// Iterate after `k` assimilated observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub k: usize,
    pub theta: Theta,
}

/// Running state of an online fit.
pub struct OnlineFit<'m, M: HmmModel + ?Sized> {
    model: &'m M,
    options: OnlineOptions,
    filter: ParticleFilter<'m, M>,
    unconstrained: Vec<f64>,
    theta: Theta,
    k: usize,
    previous_score: Vec<f64>,
    increment: Vec<f64>,
    clipped: usize,
    trace: Vec<TracePoint>,
}

impl<'m, M: HmmModel + ?Sized> OnlineFit<'m, M> {
    pub fn new(model: &'m M, init: &Theta, options: OnlineOptions, seed: u64) -> Result<Self> {
        let unconstrained = model.to_unconstrained(init)?;
        let filter = ParticleFilter::new(model, options.filter_config(), seed)?;
        let d = model.dim();
        Ok(Self {
            model,
            options,
            filter,
            unconstrained,
            theta: init.clone(),
            k: 0,
            previous_score: vec![0.0; d],
            increment: vec![0.0; d],
            clipped: 0,
            trace: Vec::new(),
        })
    }

    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    pub fn steps(&self) -> usize {
        self.k
    }

    pub fn trace(&self) -> &[TracePoint] {
        &self.trace
    }

    /// Incremental score of the last step, natural coordinates.
    pub fn last_increment(&self) -> &[f64] {
        &self.increment
    }

    /// Steps whose gradient was clipped or non-finite.
    pub fn clipped_steps(&self) -> usize {
        self.clipped
    }

    pub fn filter(&self) -> &ParticleFilter<'m, M> {
        &self.filter
    }

    /// Assimilates `y` at the current iterate and takes one gradient step.
    pub fn step(&mut self, y: f64) -> Result<&TracePoint> {
        self.filter.assimilate(&self.theta, y)?;
        let score = self.filter.score().expect("online filter tracks the score");
        for ((inc, s), prev) in self
            .increment
            .iter_mut()
            .zip(&score)
            .zip(&self.previous_score)
        {
            *inc = s - prev;
        }
        self.previous_score = score;
        self.k += 1;

        let gain = self.options.gain(self.k);
        if gain != 0.0 {
            let jac = self.model.jacobian(&self.theta);
            let mut grad: Vec<f64> = self
                .increment
                .iter()
                .zip(&jac)
                .map(|(g, j)| g * j)
                .collect();
            if grad.iter().any(|g| !g.is_finite()) {
                grad.fill(0.0);
                self.clipped += 1;
            }
            let norm = libm::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
            if norm > self.options.clip_norm {
                let s = self.options.clip_norm / norm;
                grad.iter_mut().for_each(|g| *g *= s);
                self.clipped += 1;
            }
            for ((u, g), p) in self
                .unconstrained
                .iter_mut()
                .zip(&grad)
                .zip(self.model.params())
            {
                *u = p.constraint.clamp_unconstrained(*u + gain * g);
            }
            self.theta = self.model.to_natural(&self.unconstrained)?;
        }
        self.trace.push(TracePoint {
            k: self.k,
            theta: self.theta.clone(),
        });
        Ok(self.trace.last().expect("just pushed"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub theta_hat: Theta,
    /// Particle log-likelihood at `theta_hat`, evaluated with `eval_seed`.
    pub loglik_hat: f64,
    pub particles: usize,
    pub n: usize,
    pub fit_seed: u64,
    pub eval_seed: u64,
    pub clipped_steps: usize,
    pub trace: Vec<TracePoint>,
}

/// Evaluation seed used by [`fit_online`] for a given fit seed.
pub fn default_eval_seed(fit_seed: u64) -> u64 {
    derive_seed(fit_seed, EVAL_STREAM)
}

/// Online fit over all of `observations`, then a fresh filter run at the
/// final iterate for the log-likelihood.
pub fn fit_online<M: HmmModel + ?Sized>(
    model: &M,
    observations: &[f64],
    options: &OnlineOptions,
    init: &Theta,
    seed: u64,
) -> Result<FitReport> {
    fit_online_with(
        model,
        observations,
        options,
        init,
        seed,
        default_eval_seed(seed),
        |_| {},
    )
}

/// As [`fit_online`] with an explicit evaluation seed; `observer` sees every
/// trace point as it is produced.
pub fn fit_online_with<M: HmmModel + ?Sized, F: FnMut(&TracePoint)>(
    model: &M,
    observations: &[f64],
    options: &OnlineOptions,
    init: &Theta,
    seed: u64,
    eval_seed: u64,
    mut observer: F,
) -> Result<FitReport> {
    if observations.len() < 2 {
        return Err(Error::InvalidInput(
            "online fitting needs at least two observations",
        ));
    }
    let mut fit = OnlineFit::new(model, init, options.clone(), seed)?;
    for &y in observations {
        observer(fit.step(y)?);
    }
    let theta_hat = fit.theta().clone();
    let eval = run_filter(
        model,
        &theta_hat,
        observations,
        &FilterConfig {
            track_score: false,
            ..options.filter_config()
        },
        eval_seed,
    )?;
    Ok(FitReport {
        theta_hat,
        loglik_hat: eval.loglik,
        particles: options.particles,
        n: observations.len(),
        fit_seed: seed,
        eval_seed,
        clipped_steps: fit.clipped_steps(),
        trace: fit.trace,
    })
}
