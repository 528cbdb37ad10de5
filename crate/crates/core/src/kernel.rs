//! The Pearcey kernel, from the 𝒫/𝒬 integrals and from the Ψ̃ frame.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::special::{psi_tilde, scaled_point, ScaledPoint};
use crate::{Complex64, LabError, PearceyParams, Result};

/// Below this separation `kernel_direct` refuses to divide.
pub const NEAR_DIAGONAL: f64 = 1e-8;

fn real_part(v: Complex64, tol: f64, what: &str) -> Result<f64> {
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(LabError::Numeric(format!("{what} is not finite")));
    }
    if v.im.abs() > tol * (1.0 + v.re.abs()) {
        return Err(LabError::Numeric(format!("{what} has imaginary residue {:e}", v.im)));
    }
    Ok(v.re)
}

/// Kernel with both arguments rescaled: K(x,y) = e^{λ(x)-λ(y)} · this.
pub(crate) fn balanced_offdiag(a: &ScaledPoint, b: &ScaledPoint, rho: f64) -> Complex64 {
    let (p, q) = (&a.p, &b.q);
    (p[0] * q[2] - p[1] * q[1] + p[2] * q[0] - rho * p[0] * q[0]) / (a.x - b.x)
}

pub(crate) fn balanced_diag(a: &ScaledPoint) -> Complex64 {
    let (p, q) = (&a.p, &a.q);
    a.x * p[0] * q[0] + p[1] * q[2] - p[2] * q[1]
}

pub fn kernel_direct(x: f64, y: f64, params: &PearceyParams) -> Result<f64> {
    if (x - y).abs() < NEAR_DIAGONAL {
        return Err(LabError::NearDiagonal((x - y).abs()));
    }
    let a = scaled_point(x, params.rho)?;
    let b = scaled_point(y, params.rho)?;
    let k = balanced_offdiag(&a, &b, params.rho) * (a.lambda - b.lambda).exp();
    real_part(k, 1e-10, "kernel value")
}

/// K(x, x) by L'Hôpital, using 𝒬‴ = ρ𝒬′ − y𝒬.
pub fn kernel_diag(x: f64, params: &PearceyParams) -> Result<f64> {
    let a = scaled_point(x, params.rho)?;
    real_part(balanced_diag(&a), 1e-10, "kernel diagonal")
}

/// K(x, y) for any pair; within the near-diagonal band a first-order Taylor
/// expansion about the diagonal is used.
pub fn kernel(x: f64, y: f64, params: &PearceyParams) -> Result<f64> {
    if (x - y).abs() >= NEAR_DIAGONAL {
        return kernel_direct(x, y, params);
    }
    let a = scaled_point(x, params.rho)?;
    let (p, q) = (&a.p, &a.q);
    let rho = params.rho;
    let nyy = -p[0] * q[0] - x * p[0] * q[1] - p[1] * (rho * q[1] - x * q[0]) + p[2] * q[2];
    let k = balanced_diag(&a) - 0.5 * (y - x) * nyy;
    real_part(k, 1e-10, "kernel value")
}

/// (0 1 1) Ψ̃(y)⁻¹ Ψ̃(x) (1 0 0)ᵗ / (2πi (x − y)).
pub fn kernel_rh(x: f64, y: f64, params: &PearceyParams) -> Result<f64> {
    if (x - y).abs() < NEAR_DIAGONAL {
        return Err(LabError::NearDiagonal((x - y).abs()));
    }
    let fx = psi_tilde(Complex64::new(x, 0.0), params)?;
    let fy = psi_tilde(Complex64::new(y, 0.0), params)?;
    let rhs = Vector3::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    let v = fy
        .entries
        .transpose()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| LabError::Numeric(format!("frame at y = {y} is singular")))?;
    let col = fx.entries.column(0);
    let num = v[0] * col[0] + v[1] * col[1] + v[2] * col[2];
    let k = num / (Complex64::new(0.0, 2.0 * PI) * (x - y));
    real_part(k, 1e-10, "kernel value")
}
