//! Information criteria and model selection.
//!
//! [`aic`] and [`bic`] use the `-2ℓ` scale; [`generalized_ic`] uses `-ℓ`
//! plus an arbitrary penalty, so `pen = d` gives AIC/2 and
//! `pen = (d/2) log n` gives BIC/2.

use alloc::string::String;
use alloc::vec::Vec;

mod laplace;
mod penalty;

pub use laplace::{
    laplace_log_evidence, log_evidence_from_information, particle_observed_information,
    LaplaceConfig, LaplaceEvidence,
};
pub use penalty::{
    classify_penalty, AicPenalty, BicPenalty, ClassifierConfig, Consistency, LogLogPenalty, Penalty,
};

/// `-2ℓ + 2d`.
pub fn aic(loglik: f64, d: usize) -> f64 {
    -2.0 * loglik + 2.0 * d as f64
}

/// `-2ℓ + d log n`.
pub fn bic(loglik: f64, d: usize, n: f64) -> f64 {
    -2.0 * loglik + d as f64 * libm::log(n)
}

/// `-ℓ + pen(k, n)`.
pub fn generalized_ic<P: Penalty + ?Sized>(loglik: f64, pen: &P, k: usize, n: f64) -> f64 {
    -loglik + pen.penalty(k, n)
}

/// Criteria of one fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct IcResult {
    pub model: String,
    pub d: usize,
    pub n: usize,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub generalized_ic: Option<f64>,
    pub log_evidence: Option<f64>,
}

impl IcResult {
    pub fn new(model: impl Into<String>, d: usize, n: usize, loglik: f64) -> Self {
        Self {
            model: model.into(),
            d,
            n,
            loglik,
            aic: aic(loglik, d),
            bic: bic(loglik, d, n as f64),
            generalized_ic: None,
            log_evidence: None,
        }
    }

    pub fn with_generalized<P: Penalty + ?Sized>(mut self, pen: &P, k: usize) -> Self {
        self.generalized_ic = Some(generalized_ic(self.loglik, pen, k, self.n as f64));
        self
    }

    pub fn with_log_evidence(mut self, log_evidence: f64) -> Self {
        self.log_evidence = Some(log_evidence);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Aic,
    Bic,
    Generalized,
    Evidence,
}

impl Criterion {
    /// Value to minimise; `None` if the result lacks it.
    fn objective(self, r: &IcResult) -> Option<f64> {
        match self {
            Criterion::Aic => Some(r.aic),
            Criterion::Bic => Some(r.bic),
            Criterion::Generalized => r.generalized_ic,
            Criterion::Evidence => r.log_evidence.map(|e| -e),
        }
    }
}

/// Index of the selected model: smallest AIC/BIC/generalised IC, largest
/// evidence. Exact ties go to the smaller `d`, then the earlier entry.
/// `None` for an empty list or when a value is missing.
pub fn select(results: &[IcResult], criterion: Criterion) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in results.iter().enumerate() {
        let v = criterion.objective(r)?;
        best = match best {
            None => Some((i, v)),
            Some((b, bv)) => {
                if v < bv || (v == bv && r.d < results[b].d) {
                    Some((i, v))
                } else {
                    Some((b, bv))
                }
            }
        };
    }
    best.map(|(i, _)| i)
}

/// Criteria of a model ladder with the selections of each criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonResult {
    pub results: Vec<IcResult>,
    /// `ℓ̂_big - ℓ̂_small` for the designated nested pair.
    pub lambda_n: f64,
    pub selected_by_aic: usize,
    pub selected_by_bic: usize,
    pub selected_by_evidence: Option<usize>,
}

impl ComparisonResult {
    /// `small` and `big` index the nested pair within `results`.
    pub fn new(results: Vec<IcResult>, small: usize, big: usize) -> Option<Self> {
        let lambda_n = results.get(big)?.loglik - results.get(small)?.loglik;
        Some(Self {
            selected_by_aic: select(&results, Criterion::Aic)?,
            selected_by_bic: select(&results, Criterion::Bic)?,
            selected_by_evidence: select(&results, Criterion::Evidence),
            lambda_n,
            results,
        })
    }
}
