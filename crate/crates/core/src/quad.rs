//! Gauss–Legendre rules and truncated ray integration.

use crate::{Complex64, LabError, Result};

/// Default tail bound for ray truncation.
pub const DEFAULT_TAIL_EPS: f64 = 1e-18;

/// An n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadRule {
    /// Nodes and weights mapped affinely onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }
}

/// Legendre polynomial P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn gauss_legendre(n: usize) -> Result<QuadRule> {
    if !(1..=512).contains(&n) {
        return Err(LabError::InvalidArgument(format!(
            "Gauss-Legendre order must lie in 1..=512, got {n}"
        )));
    }
    if n == 1 {
        return Ok(QuadRule { nodes: vec![0.0], weights: vec![2.0], order: 1 });
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n / 2;
    for i in 0..half {
        // Chebyshev-like starting guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        let (_, d) = legendre(n, 0.0);
        nodes[half] = 0.0;
        weights[half] = 2.0 / (d * d);
    }
    Ok(QuadRule { nodes, weights, order: n })
}

/// A straight segment `origin + direction * l`, `0 <= l <= length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySegment {
    pub origin: Complex64,
    pub direction: Complex64,
    pub length: f64,
}

impl RaySegment {
    pub fn new(origin: Complex64, angle: f64, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(LabError::InvalidArgument(format!("segment length must be positive, got {length}")));
        }
        if !angle.is_finite() || !origin.re.is_finite() || !origin.im.is_finite() {
            return Err(LabError::InvalidArgument("segment origin and angle must be finite".into()));
        }
        Ok(Self { origin, direction: Complex64::from_polar(1.0, angle), length })
    }

    pub fn point(&self, l: f64) -> Complex64 {
        self.origin + self.direction * l
    }
}

pub fn integrate_segment<F>(f: F, seg: &RaySegment, rule: &QuadRule) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let [v] = integrate_panels(|t| [f(t)], seg, rule, &[0.0, seg.length])?;
    Ok(v)
}

/// Composite rule with `panels` equal pieces.
pub fn integrate_composite<F>(f: F, seg: &RaySegment, rule: &QuadRule, panels: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let panels = panels.max(1);
    let breaks: Vec<f64> = (0..=panels).map(|k| seg.length * k as f64 / panels as f64).collect();
    let [v] = integrate_panels(|t| [f(t)], seg, rule, &breaks)?;
    Ok(v)
}

/// Integrates a vector-valued integrand along `seg` over the panels
/// `[breaks[k], breaks[k+1]]` (arc-length coordinates).
pub fn integrate_panels<const N: usize, F>(
    f: F,
    seg: &RaySegment,
    rule: &QuadRule,
    breaks: &[f64],
) -> Result<[Complex64; N]>
where
    F: Fn(Complex64) -> [Complex64; N],
{
    let mut acc = [Complex64::new(0.0, 0.0); N];
    for w in breaks.windows(2) {
        for (l, wt) in rule.mapped(w[0], w[1]) {
            let t = seg.point(l);
            let vals = f(t);
            for (a, v) in acc.iter_mut().zip(vals.iter()) {
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(LabError::Numeric(format!("non-finite integrand at node t = {t}")));
                }
                *a += v * wt;
            }
        }
    }
    for a in acc.iter_mut() {
        *a *= seg.direction;
    }
    Ok(acc)
}

/// Smallest T with exp(-c T^4) <= eps.
pub fn truncation_radius(c: f64, eps: f64) -> f64 {
    (-(eps.ln()) / c).max(0.0).powf(0.25)
}
