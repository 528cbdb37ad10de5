//! Special functions: complex Gamma, the Barnes G conjugate pair, and the
//! Pearcey-type contour integrals with the frame built from them.

mod barnes;
mod gamma;
mod pearcey;

pub use barnes::{log_barnes_pair, riemann_zeta};
pub use gamma::{gamma_complex, ln_gamma_complex};
pub use pearcey::{
    pearcey_p, pearcey_p_direct, pearcey_pq_scalar, pearcey_q_direct, psi_tilde, PearceyFrame, Which,
};
pub(crate) use pearcey::{scaled_point, ScaledPoint};

use crate::Complex64;

/// ω = e^{2πi/3}.
pub const OMEGA: Complex64 = Complex64::new(-0.5, 0.866_025_403_784_438_6);

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;
