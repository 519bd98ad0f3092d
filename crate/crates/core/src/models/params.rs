use alloc::vec::Vec;
use core::ops::Deref;

use crate::{Error, Result};

// Unconstrained coordinates are clamped so the inverse maps never round onto
// the boundary of the natural domain.
const ATANH_LIMIT: f64 = 18.0;
const LOG_LIMIT: f64 = 700.0;
const LOGIT_LIMIT: f64 = 35.0;

/// Domain of a single natural parameter and its bijection onto ℝ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `|v| < 1`, mapped with `atanh`.
    Stationary,
    /// `v > 0`, mapped with `ln`.
    Positive,
    /// `0 < v < 1`, mapped with `logit`.
    Probability,
}

impl Constraint {
    /// Open (interior) domain.
    pub fn contains(self, v: f64) -> bool {
        match self {
            Constraint::Stationary => v.is_finite() && v.abs() < 1.0,
            Constraint::Positive => v.is_finite() && v > 0.0,
            Constraint::Probability => v > 0.0 && v < 1.0,
        }
    }

    /// Domain accepted by the simulator: scales may be zero and
    /// probabilities may sit on `{0, 1}`.
    pub fn contains_closed(self, v: f64) -> bool {
        match self {
            Constraint::Stationary => v.is_finite() && v.abs() < 1.0,
            Constraint::Positive => v.is_finite() && v >= 0.0,
            Constraint::Probability => (0.0..=1.0).contains(&v),
        }
    }

    pub fn to_unconstrained(self, v: f64) -> f64 {
        match self {
            Constraint::Stationary => libm::atanh(v),
            Constraint::Positive => libm::log(v),
            Constraint::Probability => libm::log(v / (1.0 - v)),
        }
    }

    pub fn to_natural(self, u: f64) -> f64 {
        match self {
            Constraint::Stationary => libm::tanh(u.clamp(-ATANH_LIMIT, ATANH_LIMIT)),
            Constraint::Positive => libm::exp(u.clamp(-LOG_LIMIT, LOG_LIMIT)),
            Constraint::Probability => {
                let u = u.clamp(-LOGIT_LIMIT, LOGIT_LIMIT);
                1.0 / (1.0 + libm::exp(-u))
            }
        }
    }

    /// Clamps an unconstrained coordinate into the range where
    /// [`Constraint::to_natural`] is strictly interior.
    pub fn clamp_unconstrained(self, u: f64) -> f64 {
        match self {
            Constraint::Stationary => u.clamp(-ATANH_LIMIT, ATANH_LIMIT),
            Constraint::Positive => u.clamp(-LOG_LIMIT, LOG_LIMIT),
            Constraint::Probability => u.clamp(-LOGIT_LIMIT, LOGIT_LIMIT),
        }
    }

    /// `dv/du` expressed through the natural value `v`.
    pub fn jacobian(self, v: f64) -> f64 {
        match self {
            Constraint::Stationary => 1.0 - v * v,
            Constraint::Positive => v,
            Constraint::Probability => v * (1.0 - v),
        }
    }

    /// `d²v/du²` expressed through the natural value `v`.
    pub fn second_derivative(self, v: f64) -> f64 {
        match self {
            Constraint::Stationary => -2.0 * v * (1.0 - v * v),
            Constraint::Positive => v,
            Constraint::Probability => v * (1.0 - v) * (1.0 - 2.0 * v),
        }
    }
}

/// Name and domain of one model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub constraint: Constraint,
}

impl ParamSpec {
    pub const fn new(name: &'static str, constraint: Constraint) -> Self {
        Self { name, constraint }
    }
}

/// Parameter vector in a model's natural parameterisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta(Vec<f64>);

impl Theta {
    pub fn new(values: Vec<f64>) -> Self {
        Theta(values)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Theta {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Theta {
    fn from(v: Vec<f64>) -> Self {
        Theta(v)
    }
}

impl From<&[f64]> for Theta {
    fn from(v: &[f64]) -> Self {
        Theta(v.to_vec())
    }
}

pub(crate) fn check_dimension(specs: &[ParamSpec], theta: &[f64]) -> Result<()> {
    if specs.len() != theta.len() {
        return Err(Error::Dimension {
            expected: specs.len(),
            got: theta.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_interior(specs: &[ParamSpec], theta: &[f64]) -> Result<()> {
    check_dimension(specs, theta)?;
    for (spec, &v) in specs.iter().zip(theta) {
        if !spec.constraint.contains(v) {
            return Err(Error::ParameterDomain {
                name: spec.name,
                value: v,
            });
        }
    }
    Ok(())
}

pub(crate) fn check_closed(specs: &[ParamSpec], theta: &[f64]) -> Result<()> {
    check_dimension(specs, theta)?;
    for (spec, &v) in specs.iter().zip(theta) {
        if !spec.constraint.contains_closed(v) {
            return Err(Error::ParameterDomain {
                name: spec.name,
                value: v,
            });
        }
    }
    Ok(())
}
