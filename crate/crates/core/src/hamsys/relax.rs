//! Trajectories on [r_lo, r_hi] by splitting the linear flows along their
//! stable directions.
//!
//! Along the large-r solution the q-blocks carry e^{-θ₃/2} and the p-blocks
//! e^{+θ₃/2}; each linear flow also admits a parasitic mode growing like e^{θ₃}
//! relative to the wanted one in the opposite direction, so a plain initial
//! value integration over [10, 20] already loses all digits. The q-blocks are
//! integrated downward from r_hi, the p-blocks upward from r_lo, both with the
//! coupling (p₀, q₀, S) of the previous iterate, until the iterates agree.

use super::{block_groups, coupling_matrix, dopri45, init_large_r, project_to_manifold, s_matrix, HamiltonianState, StepControl};
use crate::{Complex64, IntervalFamily, LabError, PearceyParams, Result};
use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy)]
pub struct RelaxOptions {
    pub samples: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub inner_rtol: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { samples: 2001, tol: 1e-10, max_iter: 80, inner_rtol: 1e-12 }
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// p₀, q₀ and S row-major on a uniform grid, with four-point Lagrange interpolation
struct Coupling {
    r0: f64,
    h: f64,
    vals: Vec<[Complex64; 11]>,
}

impl Coupling {
    fn new(states: &[HamiltonianState]) -> Self {
        let vals = states
            .iter()
            .map(|s| {
                let m = s_matrix(&s.p, &s.q);
                let mut v = [ZERO; 11];
                v[0] = s.p0;
                v[1] = s.q0;
                for k in 0..3 {
                    for l in 0..3 {
                        v[2 + 3 * k + l] = m[k][l];
                    }
                }
                v
            })
            .collect();
        Self { r0: states[0].r, h: states[1].r - states[0].r, vals }
    }

    fn at(&self, r: f64) -> (Complex64, Complex64, [[Complex64; 3]; 3]) {
        let n = self.vals.len();
        let t = (r - self.r0) / self.h;
        let i = (t.floor() as isize).clamp(1, n as isize - 3) as usize;
        let s = t - i as f64;
        // nodes at s = -1, 0, 1, 2
        let w = [
            -s * (s - 1.0) * (s - 2.0) / 6.0,
            (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0,
            (s + 1.0) * s * (s - 1.0) / 6.0,
        ];
        let mut v = [ZERO; 11];
        for (o, wk) in w.iter().enumerate() {
            for c in 0..11 {
                v[c] += self.vals[i - 1 + o][c] * *wk;
            }
        }
        let mut sm = [[ZERO; 3]; 3];
        for k in 0..3 {
            for l in 0..3 {
                sm[k][l] = v[2 + 3 * k + l];
            }
        }
        (v[0], v[1], sm)
    }
}

// ∫ over each grid interval of samples f, fourth order
fn interval_integrals(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    (0..n - 1)
        .map(|i| {
            let v = if i == 0 {
                9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
            } else if i == n - 2 {
                f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1]
            } else {
                -f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]
            };
            v * (h / 24.0)
        })
        .collect()
}

fn block_change(a: &[[Complex64; 3]], b: &[[Complex64; 3]]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d: f64 = (0..3).map(|k| (x[k] - y[k]).norm_sqr()).sum();
            let s: f64 = (0..3).map(|k| y[k].norm_sqr()).sum();
            if s == 0.0 { d.sqrt() } else { (d / s).sqrt() }
        })
        .fold(0.0, f64::max)
}

/// Samples of a solution of the ODE system and constraint on a uniform grid of
/// `opts.samples` points over [r_lo, r_hi]. Boundary data: the q-blocks, p₀ and q₀
/// of `init_large_r(r_hi)`, and the p-blocks of `init_large_r(r_lo)` projected
/// onto the constraint manifold.
pub fn relax_trajectory(
    fam: &IntervalFamily,
    params: &PearceyParams,
    r_lo: f64,
    r_hi: f64,
    opts: &RelaxOptions,
) -> Result<Vec<HamiltonianState>> {
    if !(0.0 < r_lo && r_lo < r_hi) {
        return Err(LabError::InvalidArgument(format!("need 0 < r_lo < r_hi, got [{r_lo}, {r_hi}]")));
    }
    if opts.samples < 5 {
        return Err(LabError::InvalidArgument("need at least 5 samples".into()));
    }
    let n = opts.samples;
    let m = fam.m();
    let h = (r_hi - r_lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| if i == n - 1 { r_hi } else { r_lo + h * i as f64 }).collect();
    let mut states: Vec<HamiltonianState> =
        grid.iter().map(|&r| init_large_r(r, fam, params)).collect::<Result<_>>()?;
    let top = states[n - 1].clone();
    let bottom_p = states[0].p.clone();
    let x = fam.x().to_vec();
    let groups = block_groups(m)[2..2 + 3 * m].iter().map(|g| g - 2).collect::<Vec<_>>();
    let ctl = StepControl::new(opts.inner_rtol, 1e-300, groups);

    for _ in 0..opts.max_iter {
        let cp = Coupling::new(&states);
        let mats = |r: f64| -> Vec<[[Complex64; 3]; 3]> {
            let (p0, q0, s) = cp.at(r);
            x.iter().map(|&xj| coupling_matrix(r, xj, p0, q0, &s)).collect()
        };
        // q downward from r_hi
        let q_top: Vec<Complex64> = top.q.iter().flatten().copied().collect();
        let down: Vec<f64> = grid.iter().rev().skip(1).copied().collect();
        let qs = dopri45(
            |r, y, d| {
                let ms = mats(r);
                for j in 0..m {
                    for k in 0..3 {
                        d[3 * j + k] = (0..3).map(|l| ms[j][k][l] * y[3 * j + l]).sum();
                    }
                }
                Ok(())
            },
            r_hi,
            &q_top,
            &down,
            &ctl,
        )?;
        let mut q_grid: Vec<Vec<[Complex64; 3]>> = Vec::with_capacity(n);
        for y in qs.iter().rev() {
            q_grid.push((0..m).map(|j| [y[3 * j], y[3 * j + 1], y[3 * j + 2]]).collect());
        }
        q_grid.push(top.q.clone());
        // p upward from r_lo, started on the manifold
        let mut start = HamiltonianState { r: r_lo, p0: ZERO, q0: ZERO, p: bottom_p.clone(), q: q_grid[0].clone() };
        start = project_to_manifold(&start);
        let p_start: Vec<Complex64> = start.p.iter().flatten().copied().collect();
        let ps = dopri45(
            |r, y, d| {
                let ms = mats(r);
                for j in 0..m {
                    for k in 0..3 {
                        d[3 * j + k] = -(0..3).map(|l| y[3 * j + l] * ms[j][l][k]).sum::<Complex64>();
                    }
                }
                Ok(())
            },
            r_lo,
            &p_start,
            &grid[1..],
            &ctl,
        )?;
        let mut p_grid: Vec<Vec<[Complex64; 3]>> = vec![start.p.clone()];
        for y in &ps {
            p_grid.push((0..m).map(|j| [y[3 * j], y[3 * j + 1], y[3 * j + 2]]).collect());
        }
        // p₀, q₀ by quadrature of their right-hand sides, anchored at r_hi
        let f0: Vec<Complex64> = (0..n)
            .map(|i| -SQRT_2 * (0..m).map(|j| x[j] * p_grid[i][j][2] * q_grid[i][j][1]).sum::<Complex64>())
            .collect();
        let g0: Vec<Complex64> = (0..n)
            .map(|i| SQRT_2 * (0..m).map(|j| x[j] * p_grid[i][j][1] * q_grid[i][j][0]).sum::<Complex64>())
            .collect();
        let (fi, gi) = (interval_integrals(&f0, h), interval_integrals(&g0, h));
        let mut p0s = vec![top.p0; n];
        let mut q0s = vec![top.q0; n];
        for i in (0..n - 1).rev() {
            p0s[i] = p0s[i + 1] - fi[i];
            q0s[i] = q0s[i + 1] - gi[i];
        }
        let mut change = 0.0f64;
        let next: Vec<HamiltonianState> = (0..n)
            .map(|i| HamiltonianState {
                r: grid[i],
                p0: p0s[i],
                q0: q0s[i],
                p: p_grid[i].clone(),
                q: q_grid[i].clone(),
            })
            .collect();
        for (a, b) in next.iter().zip(&states) {
            change = change
                .max(block_change(&a.p, &b.p))
                .max(block_change(&a.q, &b.q))
                .max((a.p0 - b.p0).norm() / (1.0 + b.p0.norm()))
                .max((a.q0 - b.q0).norm() / (1.0 + b.q0.norm()));
        }
        states = next;
        if !change.is_finite() {
            return Err(LabError::Numeric("relaxation produced non-finite values".into()));
        }
        if change < opts.tol {
            return Ok(states);
        }
    }
    Err(LabError::Convergence(format!(
        "relaxation on [{r_lo}, {r_hi}] did not settle in {} sweeps",
        opts.max_iter
    )))
}
