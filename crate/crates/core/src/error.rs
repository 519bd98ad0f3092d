use thiserror::Error;

/// Errors raised by the estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside its domain")]
    ParameterDomain { name: &'static str, value: f64 },
    #[error("expected {expected} parameters, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("particle filter degenerated at t = {t}")]
    DegenerateFilter { t: usize },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("invalid step schedule (scale {scale}, exponent {exponent})")]
    InvalidSchedule { scale: f64, exponent: f64 },
    #[error("penalty difference is not monotone on the sample-size grid")]
    NonMonotonePenalty,
    #[error("evidence unavailable: {0}")]
    EvidenceUnavailable(&'static str),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateFilter { .. }
                | Error::EvidenceUnavailable(_)
                | Error::NonMonotonePenalty
        )
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
