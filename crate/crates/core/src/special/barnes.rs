use super::EULER_GAMMA;
use std::f64::consts::PI;

use num_complex::Complex64;

// B_2, B_4, ..., B_20
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// ζ'(-1)
const ZETA_PRIME_M1: f64 = -0.165_421_143_700_450_929_213_9;

/// Riemann zeta for real s > 1 by Euler–Maclaurin summation.
pub fn riemann_zeta(s: f64) -> f64 {
    assert!(s > 1.0, "riemann_zeta needs s > 1");
    const N: usize = 20;
    let nf = N as f64;
    let mut sum: f64 = (1..N).map(|n| (n as f64).powf(-s)).sum();
    sum += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // B_{2k}/(2k)! * s(s+1)...(s+2k-2) N^{-s-2k+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut npow = nf.powf(-s - 1.0);
    for k in 1..=6 {
        let term = BERNOULLI[k - 1] / fact * rising * npow;
        sum += term;
        let kk = 2 * k as u32;
        rising *= (s + kk as f64 - 1.0) * (s + kk as f64);
        fact *= (kk + 1) as f64 * (kk + 2) as f64;
        npow /= nf * nf;
    }
    sum
}

// Re log G(1 + iv), |v| < 0.9, Taylor series with zeta coefficients
fn re_log_g_series(v: f64) -> f64 {
    let v2 = v * v;
    let mut out = 0.5 * (1.0 + EULER_GAMMA) * v2;
    let mut vk = v2 * v2;
    let mut sign = 1.0;
    let mut k = 4usize;
    while k < 600 {
        let term = sign * riemann_zeta(k as f64 - 1.0) * vk / k as f64;
        out -= term;
        if term.abs() < 1e-18 * out.abs().max(1e-300) {
            break;
        }
        vk *= v2;
        sign = -sign;
        k += 2;
    }
    out
}

// Re log G(1 + iv) through G(1+z+N) = G(1+z) Π_{k=1}^{N} Γ(z+k) and the
// large-argument expansion of log G
fn re_log_g_shifted(v: f64) -> f64 {
    const N: usize = 16;
    let w = Complex64::new(N as f64, v);
    let lw = w.ln();
    let w2 = w * w;
    let mut lg = 0.5 * w2 * lw - 0.75 * w2 + 0.5 * w * (2.0 * PI).ln() - lw / 12.0 + ZETA_PRIME_M1;
    let winv2 = 1.0 / w2;
    let mut wp = winv2;
    for k in 1..=8usize {
        let kf = k as f64;
        lg += BERNOULLI[k] / (4.0 * kf * (kf + 1.0)) * wp;
        wp *= winv2;
    }
    // |Γ(1+iv)|² = πv / sinh(πv); |Γ(k+iv)|² = |Γ(1+iv)|² Π_{j<k} (j² + v²)
    let base = if v == 0.0 { 0.0 } else { 0.5 * ((PI * v) / (PI * v).sinh()).ln() };
    let mut acc = 0.0;
    let mut prod = 0.0;
    for k in 1..=N {
        if k > 1 {
            let j = (k - 1) as f64;
            prod += 0.5 * (j * j + v * v).ln();
        }
        acc += base + prod;
    }
    lg.re - acc
}

pub(crate) fn re_log_barnes_1p_iv(v: f64) -> f64 {
    if v.abs() < 0.9 {
        re_log_g_series(v)
    } else {
        re_log_g_shifted(v)
    }
}

/// 2 log( G(1 - u/(2πi)) G(1 + u/(2πi)) ), real since the arguments are conjugate.
pub fn log_barnes_pair(u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    4.0 * re_log_barnes_1p_iv(u / (2.0 * PI))
}
