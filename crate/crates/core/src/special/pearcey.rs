use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};
use std::sync::OnceLock;

use nalgebra::Matrix3;

use crate::quad::{gauss_legendre, integrate_panels, truncation_radius, QuadRule, RaySegment, DEFAULT_TAIL_EPS};
use crate::{Complex64, LabError, PearceyParams, Result};

const PANEL_POINTS: usize = 20;
// largest phase/amplitude change allowed inside one panel
const PANEL_RATE: f64 = 3.0;
const PANEL_MAX: f64 = 0.5;
const MAX_PANELS: usize = 40_000;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn rule() -> &'static QuadRule {
    static RULE: OnceLock<QuadRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_POINTS).expect("fixed order"))
}

/// Which of the two kernel building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    P,
    Q,
}

#[derive(Clone, Copy)]
enum Exponent {
    // -t^4/4 - rho t^2/2 + i t z
    P { z: Complex64, rho: f64 },
    // t^4/4 + rho t^2/2 + i t z
    Q { z: Complex64, rho: f64 },
}

impl Exponent {
    fn value(&self, t: Complex64) -> Complex64 {
        let t2 = t * t;
        match *self {
            Exponent::P { z, rho } => -0.25 * t2 * t2 - 0.5 * rho * t2 + I * t * z,
            Exponent::Q { z, rho } => 0.25 * t2 * t2 + 0.5 * rho * t2 + I * t * z,
        }
    }

    fn slope(&self, t: Complex64) -> Complex64 {
        let t2 = t * t;
        match *self {
            Exponent::P { z, rho } => -t2 * t - rho * t + I * z,
            Exponent::Q { z, rho } => t2 * t + rho * t + I * z,
        }
    }

    fn size(&self) -> (f64, f64) {
        match *self {
            Exponent::P { z, rho } | Exponent::Q { z, rho } => (z.norm(), rho),
        }
    }
}

/// ∫ (it)^k e^{φ(t) - shift} dt, k = 0..3, along the outward ray
/// `origin + l e^{i angle}`, truncated once the integrand has dropped
/// below `DEFAULT_TAIL_EPS` times its peak.
fn ray_moments(phi: Exponent, origin: Complex64, angle: f64, shift: f64) -> Result<[Complex64; 4]> {
    let dir = Complex64::from_polar(1.0, angle);
    // quartic decay rate along the ray, from Re(dir^4)
    let quartic = 0.25 * dir.powi(4).re.abs().max(0.25);
    let (zn, rho) = phi.size();
    let cap = 4.0 + 3.0 * (zn.cbrt() + rho.abs().sqrt()) + origin.norm() + truncation_radius(quartic, DEFAULT_TAIL_EPS);
    let log_eps = DEFAULT_TAIL_EPS.ln();

    let mut breaks = vec![0.0];
    let mut l = 0.0;
    let mut peak = f64::NEG_INFINITY;
    loop {
        let t = origin + dir * l;
        let re = phi.value(t).re;
        peak = peak.max(re);
        let slope = phi.slope(t) * dir;
        if l > 0.0 && re < peak + log_eps && slope.re < 0.0 {
            break;
        }
        if l > cap || breaks.len() > MAX_PANELS {
            return Err(LabError::Convergence(format!(
                "ray from {origin} at angle {angle} did not decay within length {cap}"
            )));
        }
        let width = (PANEL_RATE / slope.norm().max(1e-300)).min(PANEL_MAX);
        l += width;
        breaks.push(l);
    }
    let seg = RaySegment { origin, direction: dir, length: l };
    integrate_panels(
        |t| {
            let e = (phi.value(t) - shift).exp();
            let it = I * t;
            [e, it * e, it * it * e, it * it * it * e]
        },
        &seg,
        rule(),
        &breaks,
    )
}

fn sub(a: [Complex64; 4], b: [Complex64; 4]) -> [Complex64; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn p_saddle_height(x: f64, rho: f64) -> f64 {
    // Im of the saddle of -t^4/4 - rho t^2/2 + itx near |x|^{1/3} e^{iπ/6}
    let ax = x.abs();
    if ax < 0.5 {
        return 0.0;
    }
    let guess = 0.5 * ax.cbrt();
    let mut t = Complex64::from_polar(ax.cbrt(), PI / 6.0);
    for _ in 0..60 {
        let f = t * t * t + rho * t - I * ax;
        let df = 3.0 * t * t + rho;
        let dt = f / df;
        t -= dt;
        if dt.norm() < 1e-14 {
            break;
        }
    }
    let h = if t.re > 0.0 && t.im.is_finite() && t.im > 0.0 { t.im } else { guess };
    h.min(2.0 * guess).copysign(x)
}

fn q_saddle_angle(y: f64, rho: f64) -> f64 {
    // ray angle through the saddle of t^4/4 + rho t^2/2 + i t |y| in the fourth quadrant
    let ay = y.abs();
    let lo = FRAC_PI_8 + 0.02;
    let hi = 3.0 * FRAC_PI_8 - 0.02;
    if ay < 1.0 {
        return FRAC_PI_4;
    }
    let mut t = Complex64::from_polar(ay.cbrt(), -PI / 6.0);
    for _ in 0..60 {
        let f = t * t * t + rho * t + I * ay;
        let df = 3.0 * t * t + rho;
        let dt = f / df;
        t -= dt;
        if dt.norm() < 1e-14 {
            break;
        }
    }
    let a = -t.arg();
    if a.is_finite() && t.re > 0.0 {
        a.clamp(lo, hi)
    } else {
        PI / 6.0
    }
}

/// Moments of 𝒫ⱼ(z) (without the 1/2π), scaled by e^{-shift}.
fn p_contour(j: u8, z: Complex64, rho: f64, shift: f64) -> Result<[Complex64; 4]> {
    let phi = Exponent::P { z, rho };
    let origin = Complex64::new(0.0, p_saddle_height(z.re, rho));
    let right = ray_moments(phi, origin, 0.0, shift)?;
    let other = match j {
        0 => ray_moments(phi, origin, PI, shift)?,
        1 => ray_moments(phi, origin, PI / 2.0, shift)?,
        4 => ray_moments(phi, origin, -PI / 2.0, shift)?,
        _ => return Err(LabError::InvalidArgument(format!("contour index must be 0, 1 or 4, got {j}"))),
    };
    Ok(sub(right, other))
}

/// Moments of 2π𝒬(y), scaled by e^{-shift}.
fn q_contour(y: Complex64, rho: f64, shift: f64) -> Result<[Complex64; 4]> {
    let phi = Exponent::Q { z: y, rho };
    let bent = q_saddle_angle(y.re, rho);
    let (up, lo) = if y.re > 0.0 { (FRAC_PI_4, bent) } else { (bent, FRAC_PI_4) };
    let o = Complex64::new(0.0, 0.0);
    let upper = sub(ray_moments(phi, o, PI - up, shift)?, ray_moments(phi, o, up, shift)?);
    let lower = sub(ray_moments(phi, o, -lo, shift)?, ray_moments(phi, o, -(PI - lo), shift)?);
    Ok([upper[0] + lower[0], upper[1] + lower[1], upper[2] + lower[2], upper[3] + lower[3]])
}

fn check_order(order: usize) -> Result<()> {
    if order > 3 {
        return Err(LabError::InvalidArgument(format!("derivative order must be 0..=3, got {order}")));
    }
    Ok(())
}

fn finite(v: Complex64, what: &str) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(LabError::Numeric(format!("{what} is not finite")))
    }
}

/// d^order/dz^order 𝒫ⱼ(z) for j ∈ {0, 1, 4}. Order 3 uses 𝒫‴ = ρ𝒫′ + z𝒫.
pub fn pearcey_p(j: u8, z: Complex64, params: &PearceyParams, order: usize) -> Result<Complex64> {
    check_order(order)?;
    let m = p_contour(j, z, params.rho, 0.0)?;
    let v = if order == 3 { params.rho * m[1] + z * m[0] } else { m[order] };
    finite(v, "Pearcey integral")
}

/// Same as [`pearcey_p`] but every order by direct quadrature.
pub fn pearcey_p_direct(j: u8, z: Complex64, params: &PearceyParams, order: usize) -> Result<Complex64> {
    check_order(order)?;
    finite(p_contour(j, z, params.rho, 0.0)?[order], "Pearcey integral")
}

/// 2π-normalised 𝒬 derivatives by direct quadrature, all orders.
pub fn pearcey_q_direct(y: f64, params: &PearceyParams, order: usize) -> Result<Complex64> {
    check_order(order)?;
    let m = q_contour(Complex64::new(y, 0.0), params.rho, 0.0)?;
    finite(m[order] / (2.0 * PI), "Pearcey integral")
}

/// 𝒫(x) = 𝒫₀(x)/2π or 𝒬(y), with derivatives. Order 3 uses the third-order equations.
pub fn pearcey_pq_scalar(x: f64, params: &PearceyParams, which: Which, order: usize) -> Result<Complex64> {
    check_order(order)?;
    let z = Complex64::new(x, 0.0);
    let rho = params.rho;
    let v = match which {
        Which::P => {
            let m = p_contour(0, z, rho, 0.0)?;
            if order == 3 { rho * m[1] + z * m[0] } else { m[order] }
        }
        Which::Q => {
            let m = q_contour(z, rho, 0.0)?;
            if order == 3 { rho * m[1] - z * m[0] } else { m[order] }
        }
    };
    finite(v / (2.0 * PI), "Pearcey integral")
}

/// The 3×3 frame Ψ̃(z) = (𝒫₀ 𝒫₁ 𝒫₄) with rows of derivative order 0, 1, 2.
#[derive(Debug, Clone, PartialEq)]
pub struct PearceyFrame {
    pub z: Complex64,
    pub entries: Matrix3<Complex64>,
}

impl PearceyFrame {
    pub fn det(&self) -> Complex64 {
        self.entries.determinant()
    }
}

pub fn psi_tilde(z: Complex64, params: &PearceyParams) -> Result<PearceyFrame> {
    let mut entries = Matrix3::zeros();
    for (col, j) in [0u8, 1, 4].into_iter().enumerate() {
        let m = p_contour(j, z, params.rho, 0.0)?;
        for row in 0..3 {
            entries[(row, col)] = finite(m[row], "frame entry")?;
        }
    }
    Ok(PearceyFrame { z, entries })
}

/// Exponent λ(x) = -θ₃(|x|)/2 that balances 𝒫(x) e^{-λ} and 𝒬(x) e^{λ}.
pub(crate) fn balance_exponent(x: f64, rho: f64) -> f64 {
    let a = x.abs();
    let a23 = a.cbrt() * a.cbrt();
    -0.5 * (0.75 * a23 * a23 + 0.5 * rho * a23)
}

/// 𝒫 and 𝒬 with derivatives 0..2 at a real point, sharing one scale:
/// `p[k] = 𝒫^{(k)}(x) e^{-λ}`, `q[k] = 𝒬^{(k)}(x) e^{λ}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledPoint {
    pub x: f64,
    pub lambda: f64,
    pub p: [Complex64; 3],
    pub q: [Complex64; 3],
}

pub(crate) fn scaled_point(x: f64, rho: f64) -> Result<ScaledPoint> {
    let lambda = balance_exponent(x, rho);
    let z = Complex64::new(x, 0.0);
    let mp = p_contour(0, z, rho, lambda)?;
    let mq = q_contour(z, rho, -lambda)?;
    let n = 1.0 / (2.0 * PI);
    let p = [mp[0] * n, mp[1] * n, mp[2] * n];
    let q = [mq[0] * n, mq[1] * n, mq[2] * n];
    for v in p.iter().chain(q.iter()) {
        finite(*v, "scaled Pearcey value")?;
    }
    Ok(ScaledPoint { x, lambda, p, q })
}
