//! Dormand–Prince 5(4) for complex vector fields with dense stops at requested
//! output points.

use crate::{Complex64, LabError, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order minus embedded 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Step-size control. Components sharing a group id are measured against the
/// largest modulus in their group, so a block of widely varying magnitude
/// (e.g. an oscillating vector passing through zero) is controlled relative to
/// its own size.
#[derive(Debug, Clone)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub groups: Vec<usize>,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(rtol: f64, atol: f64, groups: Vec<usize>) -> Self {
        Self { rtol, atol, groups, initial_step: None, max_steps: 2_000_000 }
    }
}

fn group_scale(y: &[Complex64], groups: &[usize], out: &mut Vec<f64>) {
    let ng = groups.iter().copied().max().map_or(0, |g| g + 1);
    out.clear();
    out.resize(ng, 0.0);
    for (v, &g) in y.iter().zip(groups) {
        out[g] = out[g].max(v.norm());
    }
}

/// Integrates `y' = f(r, y)` from `r0` through each entry of `outputs`
/// (monotone, in the direction of integration) and returns the states there.
pub fn dopri45<F>(mut f: F, r0: f64, y0: &[Complex64], outputs: &[f64], ctl: &StepControl) -> Result<Vec<Vec<Complex64>>>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
{
    let n = y0.len();
    assert_eq!(ctl.groups.len(), n, "one group id per component");
    let Some(&last) = outputs.last() else { return Ok(vec![]) };
    let dir = if last >= r0 { 1.0 } else { -1.0 };
    let mut r = r0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut ynew = vec![Complex64::new(0.0, 0.0); n];
    let (mut s_old, mut s_new) = (Vec::new(), Vec::new());
    f(r, &y, &mut k[0])?;
    let span = (last - r0).abs().max(1e-300);
    let mut hp = ctl.initial_step.unwrap_or(1e-3 * r0.abs().max(1e-3)).min(span) * dir;
    let mut out = Vec::with_capacity(outputs.len());
    let mut steps = 0usize;
    for &target in outputs {
        while (target - r) * dir > 0.0 {
            steps += 1;
            if steps > ctl.max_steps {
                return Err(LabError::Convergence(format!("step budget exhausted at r = {r}")));
            }
            if hp.abs() < 1e-12 * r.abs().max(1e-12) {
                return Err(LabError::Stiffness { r, step: hp });
            }
            let hit = (r + hp - target) * dir >= 0.0;
            let h = if hit { target - r } else { hp };
            for s in 1..7 {
                tmp.copy_from_slice(&y);
                for (i, t) in tmp.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (st, a) in A[s].iter().enumerate().take(s) {
                        acc += k[st][i] * *a;
                    }
                    *t += acc * h;
                }
                f(r + C[s] * h, &tmp, &mut k[s])?;
            }
            // the last stage sits at the 5th-order solution
            ynew.copy_from_slice(&tmp);
            group_scale(&y, &ctl.groups, &mut s_old);
            group_scale(&ynew, &ctl.groups, &mut s_new);
            let mut err = 0.0;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for (s, c) in E.iter().enumerate() {
                    e += k[s][i] * *c;
                }
                let g = ctl.groups[i];
                let sc = ctl.atol + ctl.rtol * s_old[g].max(s_new[g]);
                let q = (e * h).norm() / sc;
                err += q * q;
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                if ynew.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(LabError::Range(format!("state overflow near r = {r}")));
                }
                hp = 0.2 * h;
                continue;
            }
            if err <= 1.0 {
                r = if hit { target } else { r + h };
                std::mem::swap(&mut y, &mut ynew);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                hp = if hit { dir * hp.abs().max(h.abs() * fac) } else { h * fac };
            } else {
                hp = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
