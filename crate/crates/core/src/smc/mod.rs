//! Bootstrap particle filter with log-likelihood and score estimation.
//!
//! Each step `t` reads its randomness from stream `t` of a [`StepRng`]: one
//! uniform for the systematic offset (drawn whether or not resampling
//! happens), then any multinomial draws, then one normal per particle for
//! propagation. Before resampling the cloud is sorted by state, which makes
//! every step invariant to the order of the incoming particles and keeps the
//! likelihood estimate close to continuous in θ under a fixed seed.
//!
//! With score tracking on, every particle carries a tag `α_i` approximating
//! `∇_θ log p_θ(x_t, y_{0:t})`; tags follow their ancestors through
//! resampling and are updated by [`score_recursion`]. The score estimate is
//! `Σ_i w_i α_i`.

use alloc::vec;
use alloc::vec::Vec;

use crate::models::{HmmModel, TransitionKernel};
use crate::rng::{standard_normal, uniform, StepRng};
use crate::{Error, Result};

mod binned;
mod exp;
mod resample;
mod score;

pub use resample::{ess, multinomial_resample, resample, systematic_resample, ResampleScheme};
pub use score::{score_recursion, score_step};

/// Weighted particle cloud at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub particles: Vec<f64>,
    /// Normalised log-weights.
    pub log_weights: Vec<f64>,
    /// Normalised weights.
    pub weights: Vec<f64>,
    /// Score tags, row-major `N × d`, when tracking is on.
    pub alphas: Option<Vec<f64>>,
    pub loglik: f64,
    pub t: usize,
}

impl ParticleState {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// `Σ_i w_i α_i`.
    pub fn score(&self, d: usize) -> Option<Vec<f64>> {
        let alphas = self.alphas.as_ref()?;
        let mut s = vec![0.0; d];
        for (w, row) in self.weights.iter().zip(alphas.chunks_exact(d)) {
            for (acc, a) in s.iter_mut().zip(row) {
                *acc += w * a;
            }
        }
        Some(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub particles: usize,
    pub scheme: ResampleScheme,
    /// Resample when `ESS < resample_threshold · N`.
    pub resample_threshold: f64,
    pub track_score: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            particles: 200,
            scheme: ResampleScheme::Systematic,
            resample_threshold: 0.5,
            track_score: false,
        }
    }
}

impl FilterConfig {
    pub fn with_particles(particles: usize) -> Self {
        Self {
            particles,
            ..Self::default()
        }
    }

    pub fn tracking_score(mut self) -> Self {
        self.track_score = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub loglik: f64,
    pub score: Option<Vec<f64>>,
    pub ess_trace: Vec<f64>,
    pub resample_count: usize,
    pub seed: u64,
}

/// Stepwise bootstrap filter. θ is passed per step, so it may change between
/// steps (as in online estimation).
#[derive(Debug, Clone)]
pub struct ParticleFilter<'m, M: HmmModel + ?Sized> {
    model: &'m M,
    config: FilterConfig,
    rng: StepRng,
    state: Option<ParticleState>,
    ess_trace: Vec<f64>,
    resample_count: usize,
    // scratch
    order: Vec<usize>,
    ancestors: Vec<usize>,
    buf_particles: Vec<f64>,
    buf_log_weights: Vec<f64>,
    buf_alphas: Vec<f64>,
    obs_grads: Vec<f64>,
    recursion: Vec<f64>,
}

impl<'m, M: HmmModel + ?Sized> ParticleFilter<'m, M> {
    pub fn new(model: &'m M, config: FilterConfig, seed: u64) -> Result<Self> {
        if config.particles == 0 {
            return Err(Error::InvalidInput("at least one particle is required"));
        }
        if config.resample_threshold.is_nan() || config.resample_threshold < 0.0 {
            return Err(Error::InvalidInput(
                "resample threshold must be non-negative",
            ));
        }
        Ok(Self {
            model,
            config,
            rng: StepRng::new(seed),
            state: None,
            ess_trace: Vec::new(),
            resample_count: 0,
            order: Vec::new(),
            ancestors: Vec::new(),
            buf_particles: Vec::new(),
            buf_log_weights: Vec::new(),
            buf_alphas: Vec::new(),
            obs_grads: Vec::new(),
            recursion: Vec::new(),
        })
    }

    /// Resumes from an explicit cloud; the next [`ParticleFilter::assimilate`]
    /// call processes time `state.t + 1`.
    pub fn from_state(
        model: &'m M,
        config: FilterConfig,
        seed: u64,
        state: ParticleState,
    ) -> Result<Self> {
        let mut f = Self::new(model, config, seed)?;
        if state.alphas.is_some() != f.config.track_score {
            return Err(Error::InvalidInput(
                "score tags must match the tracking setting",
            ));
        }
        f.state = Some(state);
        Ok(f)
    }

    pub fn state(&self) -> Option<&ParticleState> {
        self.state.as_ref()
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn loglik(&self) -> f64 {
        self.state.as_ref().map_or(0.0, |s| s.loglik)
    }

    pub fn score(&self) -> Option<Vec<f64>> {
        self.state.as_ref()?.score(self.model.dim())
    }

    pub fn ess_trace(&self) -> &[f64] {
        &self.ess_trace
    }

    pub fn resample_count(&self) -> usize {
        self.resample_count
    }

    pub fn output(&self) -> FilterOutput {
        FilterOutput {
            loglik: self.loglik(),
            score: self.score(),
            ess_trace: self.ess_trace.clone(),
            resample_count: self.resample_count,
            seed: self.rng.seed(),
        }
    }

    /// Processes the next observation at θ and returns the log-likelihood
    /// increment.
    pub fn assimilate(&mut self, theta: &[f64], y: f64) -> Result<f64> {
        match self.state.take() {
            None => self.initialize(theta, y),
            Some(prev) => self.step(prev, theta, y),
        }
    }

    fn initialize(&mut self, theta: &[f64], y: f64) -> Result<f64> {
        let n = self.config.particles;
        let d = self.model.dim();
        let stream = self.rng.at_step(0);
        let _offset = uniform(stream);
        let particles: Vec<f64> = (0..n)
            .map(|_| self.model.initial_state(theta, standard_normal(stream)))
            .collect();
        let alphas = if self.config.track_score {
            let mut alphas = vec![0.0; n * d];
            let mut init_grad = vec![0.0; d];
            for (x, row) in particles.iter().zip(alphas.chunks_exact_mut(d)) {
                self.model.grad_log_g(theta, y, *x, row);
                self.model.grad_log_initial(theta, *x, &mut init_grad);
                for (a, g) in row.iter_mut().zip(&init_grad) {
                    *a += g;
                }
            }
            Some(alphas)
        } else {
            None
        };
        let uniform_log_weight = -libm::log(n as f64);
        let mut state = ParticleState {
            particles,
            log_weights: vec![uniform_log_weight; n],
            weights: vec![1.0 / n as f64; n],
            alphas,
            loglik: 0.0,
            t: 0,
        };
        let increment = self.reweight(&mut state, theta, y)?;
        self.state = Some(state);
        Ok(increment)
    }

    fn step(&mut self, mut state: ParticleState, theta: &[f64], y: f64) -> Result<f64> {
        let n = state.len();
        let d = self.model.dim();
        let t = state.t + 1;
        let stream = self.rng.at_step(t);
        let offset = uniform(stream);

        sort_by_state(
            &mut state,
            d,
            &mut self.order,
            &mut self.buf_particles,
            &mut self.buf_log_weights,
            &mut self.buf_alphas,
        );

        if ess(&state.weights) < self.config.resample_threshold * n as f64 {
            match self.config.scheme {
                ResampleScheme::Systematic => {
                    systematic_resample(&state.weights, n, offset, &mut self.ancestors)
                }
                ResampleScheme::Multinomial => {
                    multinomial_resample(&state.weights, n, stream, &mut self.ancestors)
                }
            }
            self.buf_particles.clear();
            self.buf_particles
                .extend(self.ancestors.iter().map(|&a| state.particles[a]));
            core::mem::swap(&mut state.particles, &mut self.buf_particles);
            if let Some(alphas) = state.alphas.as_mut() {
                self.buf_alphas.clear();
                for &a in &self.ancestors {
                    self.buf_alphas
                        .extend_from_slice(&alphas[a * d..(a + 1) * d]);
                }
                core::mem::swap(alphas, &mut self.buf_alphas);
            }
            state.weights.fill(1.0 / n as f64);
            state.log_weights.fill(-libm::log(n as f64));
            self.resample_count += 1;
        }

        let kernel = self.model.transition_kernel(theta);
        self.buf_particles.clear();
        self.buf_particles.extend(
            state
                .particles
                .iter()
                .map(|&x| kernel.propagate(x, standard_normal(stream))),
        );

        if let Some(alphas) = state.alphas.as_mut() {
            self.obs_grads.resize(n * d, 0.0);
            for (x, g) in self
                .buf_particles
                .iter()
                .zip(self.obs_grads.chunks_exact_mut(d))
            {
                self.model.grad_log_g(theta, y, *x, g);
            }
            self.buf_alphas.resize(n * d, 0.0);
            score_recursion(
                &kernel,
                &state.particles,
                &state.log_weights,
                alphas,
                &self.buf_particles,
                &self.obs_grads,
                d,
                t,
                &mut self.buf_alphas,
                &mut self.recursion,
            )?;
            core::mem::swap(alphas, &mut self.buf_alphas);
        }
        core::mem::swap(&mut state.particles, &mut self.buf_particles);
        state.t = t;
        let increment = self.reweight(&mut state, theta, y)?;
        self.state = Some(state);
        Ok(increment)
    }

    /// Multiplies the prior weights by `g_θ(y | x_i)`, normalises and
    /// accumulates `log Σ_i w_i g_θ(y | x_i)`.
    fn reweight(&mut self, state: &mut ParticleState, theta: &[f64], y: f64) -> Result<f64> {
        let mut max = f64::NEG_INFINITY;
        for (lw, x) in state.log_weights.iter_mut().zip(&state.particles) {
            let v = *lw + self.model.log_g(theta, y, *x);
            *lw = if v.is_nan() { f64::NEG_INFINITY } else { v };
            if *lw > max {
                max = *lw;
            }
        }
        if !max.is_finite() {
            return Err(Error::DegenerateFilter { t: state.t });
        }
        let mut total = 0.0;
        for (w, lw) in state.weights.iter_mut().zip(&state.log_weights) {
            *w = libm::exp(lw - max);
            total += *w;
        }
        let increment = max + libm::log(total);
        for (w, lw) in state.weights.iter_mut().zip(state.log_weights.iter_mut()) {
            *w /= total;
            *lw -= increment;
        }
        if !increment.is_finite() {
            return Err(Error::DegenerateFilter { t: state.t });
        }
        state.loglik += increment;
        self.ess_trace.push(ess(&state.weights));
        Ok(increment)
    }
}

fn sort_by_state(
    state: &mut ParticleState,
    d: usize,
    order: &mut Vec<usize>,
    buf_x: &mut Vec<f64>,
    buf_lw: &mut Vec<f64>,
    buf_alpha: &mut Vec<f64>,
) {
    if state.particles.windows(2).all(|w| w[0] <= w[1]) {
        return;
    }
    order.clear();
    order.extend(0..state.len());
    order.sort_by(|&a, &b| state.particles[a].total_cmp(&state.particles[b]));
    buf_x.clear();
    buf_x.extend(order.iter().map(|&i| state.particles[i]));
    core::mem::swap(&mut state.particles, buf_x);
    buf_x.clear();
    buf_x.extend(order.iter().map(|&i| state.weights[i]));
    core::mem::swap(&mut state.weights, buf_x);
    buf_lw.clear();
    buf_lw.extend(order.iter().map(|&i| state.log_weights[i]));
    core::mem::swap(&mut state.log_weights, buf_lw);
    if let Some(alphas) = state.alphas.as_mut() {
        buf_alpha.clear();
        for &i in order.iter() {
            buf_alpha.extend_from_slice(&alphas[i * d..(i + 1) * d]);
        }
        core::mem::swap(alphas, buf_alpha);
    }
}

/// One bootstrap step applied to an explicit cloud: optional resampling,
/// propagation through the transition, reweighting by `g_θ(y_t | ·)`, and the
/// tag update when `state` carries tags. `state.t + 1` selects the random
/// stream of `seed`.
pub fn bootstrap_step<M: HmmModel + ?Sized>(
    state: ParticleState,
    y: f64,
    model: &M,
    theta: &[f64],
    seed: u64,
    config: &FilterConfig,
) -> Result<ParticleState> {
    model.check_theta(theta)?;
    let mut config = config.clone();
    config.track_score = state.alphas.is_some();
    let mut filter = ParticleFilter::from_state(model, config, seed, state)?;
    filter.assimilate(theta, y)?;
    Ok(filter.state.take().expect("state present after a step"))
}

/// Runs the filter over `observations` at a fixed θ.
pub fn run_filter<M: HmmModel + ?Sized>(
    model: &M,
    theta: &[f64],
    observations: &[f64],
    config: &FilterConfig,
    seed: u64,
) -> Result<FilterOutput> {
    model.check_theta(theta)?;
    if observations.is_empty() {
        return Err(Error::InvalidInput("no observations"));
    }
    let mut filter = ParticleFilter::new(model, config.clone(), seed)?;
    for &y in observations {
        filter.assimilate(theta, y)?;
    }
    Ok(filter.output())
}
