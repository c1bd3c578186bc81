//! Simulation of multifractional multistable Riemann-Liouville processes
//! through their Haar wavelet-series representation, with the equivalent
//! dyadic-average scheme and a validation harness.

pub mod cli;
pub mod error;
pub mod integrand;
pub mod kernel;
pub mod numerics;
pub mod params;
pub mod sampler;
pub mod simulator;
pub mod validation;

pub use error::{Error, Result};
