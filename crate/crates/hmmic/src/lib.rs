//! Command-line front end, CSV formats and simulation studies for
//! `hmmic-core`.

pub mod cli;
pub mod config;
mod error;
pub mod io;
pub mod study;

pub use error::{Error, Result};
pub use hmmic_core as core;
