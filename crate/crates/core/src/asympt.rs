//! Closed-form large-r asymptotics of the generating function, the counting
//! statistics and the Hamiltonian.

use std::f64::consts::PI;

use crate::special::{gamma_complex, log_barnes_pair, EULER_GAMMA, OMEGA};
use crate::{Complex64, IntervalFamily, LabError, PearceyParams, Result};

fn pow23(x: f64) -> f64 {
    let c = x.cbrt();
    c * c
}

fn pow43(x: f64) -> f64 {
    let c = x.cbrt();
    x * c
}

/// μ_ρ(x) = (3√3/4π) x^{4/3} − (√3ρ/2π) x^{2/3}.
pub fn mu(x: f64, params: &PearceyParams) -> f64 {
    let s3 = 3f64.sqrt();
    3.0 * s3 / (4.0 * PI) * pow43(x) - s3 * params.rho / (2.0 * PI) * pow23(x)
}

/// σ²(x) = (4/3π²) log x + log(9/2)/π².
pub fn sigma2(x: f64) -> f64 {
    (4.0 / 3.0 * x.ln() + 4.5f64.ln()) / (PI * PI)
}

// |x_j^{2/3} − ω x_k^{2/3}| / |x_j^{2/3} − x_k^{2/3}|
fn modulus_ratio(xk: f64, xj: f64) -> Result<f64> {
    let (a, b) = (pow23(xj), pow23(xk));
    if a == b {
        return Err(LabError::Domain(format!("coinciding endpoints {xk} and {xj}")));
    }
    Ok((Complex64::new(a, 0.0) - OMEGA * b).norm() / (a - b).abs())
}

/// Σ(x_k, x_j) = (1/π²) log |x_j^{2/3} − ω x_k^{2/3}| / |x_j^{2/3} − x_k^{2/3}|.
pub fn cov_sigma(xk: f64, xj: f64) -> Result<f64> {
    Ok(modulus_ratio(xk, xj)?.ln() / (PI * PI))
}

/// θ₃(s) = (3/4) s^{4/3} + (ρ/2) s^{2/3}.
pub fn theta3(s: f64, params: &PearceyParams) -> f64 {
    0.75 * pow43(s) + 0.5 * params.rho * pow23(s)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AsymptoticBreakdown {
    pub mu_sum: f64,
    pub sigma_sum: f64,
    pub cross_sum: f64,
    pub barnes_sum: f64,
    pub total: f64,
}

/// Large-r value of log F(r x, u), term by term.
pub fn log_gen_fun_asympt(params: &PearceyParams, fam: &IntervalFamily, r: f64) -> Result<AsymptoticBreakdown> {
    if !(r > 0.0) {
        return Err(LabError::Domain(format!("r must be positive, got {r}")));
    }
    let (x, u) = (fam.x(), fam.u());
    let m = fam.m();
    let mut b = AsymptoticBreakdown { mu_sum: 0.0, sigma_sum: 0.0, cross_sum: 0.0, barnes_sum: 0.0, total: 0.0 };
    for j in 0..m {
        b.mu_sum += u[j] * mu(r * x[j], params);
        b.sigma_sum += 0.5 * u[j] * u[j] * sigma2(r * x[j]);
        b.barnes_sum += log_barnes_pair(u[j]);
        for k in j + 1..m {
            b.cross_sum += u[j] * u[k] * cov_sigma(x[k], x[j])?;
        }
    }
    b.total = b.mu_sum + b.sigma_sum + b.cross_sum + b.barnes_sum;
    Ok(b)
}

fn check_index(j: usize, fam: &IntervalFamily) -> Result<usize> {
    if j == 0 || j > fam.m() {
        return Err(LabError::InvalidArgument(format!("interval index {j} outside 1..={}", fam.m())));
    }
    Ok(j - 1)
}

/// Γ(1 − u/(2πi)) = Γ(1 + iu/2π).
fn gamma_shift(u: f64) -> Result<Complex64> {
    gamma_complex(Complex64::new(1.0, u / (2.0 * PI)))
}

/// Amplitude 𝒜_j (one-based j).
pub fn amp_a(j: usize, fam: &IntervalFamily) -> Result<f64> {
    let jj = check_index(j, fam)?;
    let (x, u) = (fam.x(), fam.u());
    let xj = pow23(x[jj]);
    let mut e = -u[jj] / 3.0;
    for k in jj + 1..fam.m() {
        e -= 0.5 * u[k];
    }
    for k in (0..fam.m()).filter(|&k| k != jj) {
        let xk = pow23(x[k]);
        e -= u[k] / (2.0 * PI) * (3f64.sqrt() * xk / (xk + 2.0 * xj)).atan();
    }
    Ok(gamma_shift(u[jj])?.norm() * e.exp())
}

/// Phase ϑ_j(r) (one-based j).
pub fn phase_theta(j: usize, fam: &IntervalFamily, r: f64, params: &PearceyParams) -> Result<f64> {
    let jj = check_index(j, fam)?;
    let (x, u) = (fam.x(), fam.u());
    let rx = r * x[jj];
    let s3 = 3f64.sqrt();
    let mut t = -3.0 * s3 / 8.0 * pow43(rx) + s3 * params.rho / 4.0 * pow23(rx);
    t += gamma_shift(u[jj])?.arg();
    t -= u[jj] / (2.0 * PI) * (4.0 / 3.0 * rx.ln() + 4.5f64.ln());
    for k in (0..fam.m()).filter(|&k| k != jj) {
        t -= u[k] / (2.0 * PI) * modulus_ratio(x[k], x[jj])?.ln();
    }
    Ok(t)
}

/// Large-r Hamiltonian, without its O(r^{-5/3}) remainder.
pub fn hamiltonian_asympt(fam: &IntervalFamily, r: f64, params: &PearceyParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(LabError::Domain(format!("r must be positive, got {r}")));
    }
    let s3 = 3f64.sqrt();
    let (x, u) = (fam.x(), fam.u());
    let mut h = 0.0;
    for j in 0..fam.m() {
        let th = phase_theta(j + 1, fam, r, params)?;
        h += s3 / (2.0 * PI) * u[j] * pow43(x[j]) * r.cbrt()
            - params.rho / (2.0 * s3 * PI) * u[j] * pow23(x[j]) / r.cbrt()
            + u[j] * u[j] / (3.0 * PI * PI * r)
            - u[j] / (3.0 * s3 * PI * r) * (2.0 * th).cos();
    }
    Ok(h)
}

/// Variance constant (1 + γ_E)/π².
pub fn variance_constant() -> f64 {
    (1.0 + EULER_GAMMA) / (PI * PI)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AsymptoticStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    /// cov[j][k] = Σ(x_k, x_j) off the diagonal, variance on it
    pub cov: Vec<Vec<f64>>,
}

pub fn stats_asympt(x: &[f64], r: f64, params: &PearceyParams) -> Result<AsymptoticStats> {
    let fam = IntervalFamily::endpoints(x.to_vec())?;
    let m = fam.m();
    let mean: Vec<f64> = x.iter().map(|&xj| mu(r * xj, params)).collect();
    let var: Vec<f64> = x.iter().map(|&xj| sigma2(r * xj) + variance_constant()).collect();
    let mut cov = vec![vec![0.0; m]; m];
    for j in 0..m {
        cov[j][j] = var[j];
        for k in j + 1..m {
            let c = cov_sigma(x[k], x[j])?;
            cov[j][k] = c;
            cov[k][j] = c;
        }
    }
    Ok(AsymptoticStats { mean, var, cov })
}

/// u_j = (√3π/2) a_j / √(log r).
pub fn clt_scaling(a: &[f64], r: f64) -> Result<Vec<f64>> {
    if !(r > std::f64::consts::E) {
        return Err(LabError::Domain(format!("r must exceed e, got {r}")));
    }
    let c = 3f64.sqrt() * PI / (2.0 * r.ln().sqrt());
    Ok(a.iter().map(|aj| c * aj).collect())
}

/// Asymptotic log 𝔼[exp Σ_j u_j (N(r x_j) − μ_ρ(r x_j))] at u = clt_scaling(a, r):
/// the breakdown total with the mean term removed (summed directly, since the
/// mean term grows like r^{4/3}).
pub fn clt_log_mgf(params: &PearceyParams, x: &[f64], a: &[f64], r: f64) -> Result<f64> {
    let u = clt_scaling(a, r)?;
    let fam = IntervalFamily::new(x.to_vec(), u)?;
    let b = log_gen_fun_asympt(params, &fam, r)?;
    Ok(b.sigma_sum + b.cross_sum + b.barnes_sum)
}
