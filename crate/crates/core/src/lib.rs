//! Maximum-likelihood estimation and information-criterion model selection
//! for general hidden Markov models.
//!
//! The crate is `no_std` (it needs `alloc`). It contains:
//!
//! * [`models`]: the HMM abstraction plus the linear-Gaussian, stochastic
//!   volatility (SV) and SV-with-jumps (SVJ) models and trajectory simulation.
//! * [`kalman`]: exact likelihood, score and MLE for the linear-Gaussian model.
//! * [`smc`]: a bootstrap particle filter with the O(N²) particle score
//!   recursion.
//! * [`fit`]: online gradient-ascent parameter estimation driven by the
//!   particle score.
//! * [`criteria`]: AIC, BIC, penalised criteria, Laplace evidence and model
//!   selection.
//!
//! IO, the command line and the replication harness live in the `hmmic` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

// Transcendental functions are called through `libm` explicitly so results do
// not depend on whether std happens to be linked into the build.

pub mod criteria;
mod error;
pub mod fit;
pub mod kalman;
pub mod models;
pub mod rng;
pub mod smc;

pub use error::{Error, Result};
pub use models::{HmmModel, Theta};
