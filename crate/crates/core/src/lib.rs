//! Numerical laboratory for the Pearcey determinantal point process.
//!
//! The moment generating function of the counting statistics on a family of
//! symmetric intervals is computed as a Fredholm determinant, compared with its
//! closed-form large-gap asymptotics, and linked to a Hamiltonian ODE system.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod asympt;
pub mod cli;
pub mod error;
pub mod fredholm;
pub mod hamsys;
pub mod kernel;
pub mod quad;
pub mod special;

pub use error::{LabError, Result};
pub use num_complex::Complex64;

/// The cusp parameter of the kernel family.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PearceyParams {
    pub rho: f64,
}

impl PearceyParams {
    pub fn new(rho: f64) -> Result<Self> {
        if !rho.is_finite() {
            return Err(LabError::InvalidArgument(format!("rho must be finite, got {rho}")));
        }
        Ok(Self { rho })
    }
}

impl Default for PearceyParams {
    fn default() -> Self {
        Self { rho: 0.0 }
    }
}

pub use fredholm::IntervalFamily;
