use crate::{Complex64, LabError, Result};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn check_pole(z: Complex64) -> Result<()> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(LabError::Domain(format!("Gamma has a pole at {}", z.re)));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(LabError::Domain(format!("non-finite Gamma argument {z}")));
    }
    Ok(())
}

// log Γ(z) for Re z >= 1/2
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut a = Complex64::new(LANCZOS[0], 0.0);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// log Γ(z); the imaginary part is a continuous branch, not reduced mod 2π.
pub fn ln_gamma_complex(z: Complex64) -> Result<Complex64> {
    check_pole(z)?;
    if z.re >= 0.5 {
        Ok(ln_gamma_right(z))
    } else {
        // Γ(z) Γ(1-z) = π / sin(πz)
        let s = (z * PI).sin();
        Ok(Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma_right(1.0 - z))
    }
}

pub fn gamma_complex(z: Complex64) -> Result<Complex64> {
    check_pole(z)?;
    if z.re >= 0.5 {
        Ok(ln_gamma_right(z).exp())
    } else {
        let s = (z * PI).sin();
        Ok(PI / (s * ln_gamma_right(1.0 - z).exp()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn anchors() {
        assert!((gamma_complex(c(1.0, 0.0)).unwrap() - 1.0).norm() < 1e-14);
        assert!((gamma_complex(c(5.0, 0.0)).unwrap() - 24.0).norm() < 1e-12);
        assert!((gamma_complex(c(0.5, 0.0)).unwrap() - PI.sqrt()).norm() < 1e-14);
        assert!((gamma_complex(c(-0.5, 0.0)).unwrap() + 2.0 * PI.sqrt()).norm() < 1e-13);
    }

    #[test]
    fn poles() {
        for k in 0..4 {
            assert!(matches!(gamma_complex(c(-(k as f64), 0.0)), Err(LabError::Domain(_))));
        }
    }

    #[test]
    fn modulus_on_imaginary_line() {
        for y in [0.5, 1.0, 2.0] {
            let g = gamma_complex(c(1.0, y)).unwrap();
            let exact = PI * y / (PI * y).sinh();
            assert!((g.norm_sqr() / exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn recurrence_and_log() {
        let z = c(3.3, -7.1);
        let lhs = gamma_complex(z + 1.0).unwrap();
        let rhs = z * gamma_complex(z).unwrap();
        assert!((lhs / rhs - 1.0).norm() < 1e-13);
        let lg = ln_gamma_complex(c(-2.7, 0.4)).unwrap().exp();
        let g = gamma_complex(c(-2.7, 0.4)).unwrap();
        assert!((lg / g - 1.0).norm() < 1e-12);
        // Γ(20) = 19!
        let g20 = gamma_complex(c(20.0, 0.0)).unwrap();
        assert!((g20.re / 121_645_100_408_832_000.0 - 1.0).abs() < 1e-13);
    }
}
