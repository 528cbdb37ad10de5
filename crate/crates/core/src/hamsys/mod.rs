//! The 6m+2 Hamiltonian system, its large-r data, flows and identity checks.

mod integrate;
mod relax;

pub use integrate::{dopri45, StepControl};
pub use relax::{relax_trajectory, RelaxOptions};

use std::f64::consts::{PI, SQRT_2};

use crate::asympt::{amp_a, hamiltonian_asympt, phase_theta, theta3};
use crate::fredholm::log_gen_fun;
use crate::{Complex64, IntervalFamily, LabError, PearceyParams, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Phase-space point (r; p₀, q₀, p_{j,k}, q_{j,k}), k = 1..3 stored at 0..2.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianState {
    pub r: f64,
    pub p0: Complex64,
    pub q0: Complex64,
    pub p: Vec<[Complex64; 3]>,
    pub q: Vec<[Complex64; 3]>,
}

pub type Mat3 = [[Complex64; 3]; 3];

impl HamiltonianState {
    pub fn zero(r: f64, m: usize) -> Self {
        Self { r, p0: ZERO, q0: ZERO, p: vec![[ZERO; 3]; m], q: vec![[ZERO; 3]; m] }
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    /// Flat layout [p₀, q₀, p_{1,·}, …, p_{m,·}, q_{1,·}, …, q_{m,·}].
    pub fn to_vec(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(2 + 6 * self.m());
        v.push(self.p0);
        v.push(self.q0);
        v.extend(self.p.iter().flatten());
        v.extend(self.q.iter().flatten());
        v
    }

    pub fn from_slice(r: f64, v: &[Complex64]) -> Self {
        let m = (v.len() - 2) / 6;
        let block = |off: usize| -> Vec<[Complex64; 3]> {
            (0..m).map(|j| [v[off + 3 * j], v[off + 3 * j + 1], v[off + 3 * j + 2]]).collect()
        };
        Self { r, p0: v[0], q0: v[1], p: block(2), q: block(2 + 3 * m) }
    }

    /// Σ_k p_{j,k} q_{j,k} for each j.
    pub fn traces(&self) -> Vec<Complex64> {
        self.p.iter().zip(&self.q).map(|(p, q)| p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).collect()
    }

    /// Largest per-j trace relative to Σ_k |p_{j,k} q_{j,k}|.
    pub fn constraint_residual(&self) -> f64 {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| {
                let t = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
                let s: f64 = (0..3).map(|k| (p[k] * q[k]).norm()).sum();
                if s == 0.0 { 0.0 } else { t.norm() / s }
            })
            .fold(0.0, f64::max)
    }

    fn check(&self, fam: &IntervalFamily) -> Result<()> {
        if !(self.r > 0.0) {
            return Err(LabError::Domain(format!("r must be positive, got {}", self.r)));
        }
        if self.m() != fam.m() || self.q.len() != fam.m() {
            return Err(LabError::InvalidArgument(format!(
                "state has {} blocks, family has {}",
                self.m(),
                fam.m()
            )));
        }
        Ok(())
    }
}

/// S_{kl} = Σ_j p_{j,k} q_{j,l}, the rank-one blocks A_j = q_j p_jᵗ and the
/// coupling matrices M_j with q_j′ = M_j q_j, p_j′ = −p_j M_j.
#[derive(Debug, Clone)]
pub struct DerivedCouplings {
    pub s: Mat3,
    pub a: Vec<Mat3>,
    pub m: Vec<Mat3>,
}

pub(crate) fn s_matrix(p: &[[Complex64; 3]], q: &[[Complex64; 3]]) -> Mat3 {
    let mut s = [[ZERO; 3]; 3];
    for (pj, qj) in p.iter().zip(q) {
        for k in 0..3 {
            for l in 0..3 {
                s[k][l] += pj[k] * qj[l];
            }
        }
    }
    s
}

pub(crate) fn coupling_matrix(r: f64, x: f64, p0: Complex64, q0: Complex64, s: &Mat3) -> Mat3 {
    let c = 2.0 / r;
    let xc = Complex64::new(x, 0.0);
    [
        [c * s[0][0], xc, c * s[2][0]],
        [SQRT_2 * p0 * x, c * s[1][1], xc],
        [r * x * x + c * s[0][2], SQRT_2 * q0 * x, c * s[2][2]],
    ]
}

impl DerivedCouplings {
    pub fn from_state(state: &HamiltonianState, fam: &IntervalFamily) -> Result<Self> {
        state.check(fam)?;
        let s = s_matrix(&state.p, &state.q);
        let a = state
            .p
            .iter()
            .zip(&state.q)
            .map(|(p, q)| {
                let mut a = [[ZERO; 3]; 3];
                for k in 0..3 {
                    for l in 0..3 {
                        a[k][l] = q[k] * p[l];
                    }
                }
                a
            })
            .collect();
        let m = fam.x().iter().map(|&x| coupling_matrix(state.r, x, state.p0, state.q0, &s)).collect();
        Ok(Self { s, a, m })
    }
}

pub fn hamiltonian(state: &HamiltonianState, fam: &IntervalFamily) -> Result<Complex64> {
    state.check(fam)?;
    let r = state.r;
    let (p, q) = (&state.p, &state.q);
    let mut h = ZERO;
    let (mut a, mut b) = (ZERO, ZERO);
    for (j, &x) in fam.x().iter().enumerate() {
        a += x * p[j][1] * q[j][0];
        b += x * p[j][2] * q[j][1];
        h += x * p[j][0] * q[j][1] + x * p[j][1] * q[j][2] + r * x * x * p[j][2] * q[j][0];
    }
    h += SQRT_2 * state.p0 * a + SQRT_2 * state.q0 * b;
    let s = s_matrix(p, q);
    let d = s[0][0] - s[1][1] + s[2][2];
    let mut cross = ZERO;
    for k in 0..p.len() {
        for l in 0..p.len() {
            cross += (p[k][0] * p[l][2] - p[k][2] * p[l][0]) * (q[k][0] * q[l][2] - q[k][2] * q[l][0]);
        }
    }
    h += (d * d - 2.0 * cross) / (2.0 * r);
    Ok(h)
}

fn rhs_into(r: f64, x: &[f64], v: &[Complex64], out: &mut [Complex64]) {
    let m = x.len();
    let (p0, q0) = (v[0], v[1]);
    let pj = |j: usize, k: usize| v[2 + 3 * j + k];
    let qj = |j: usize, k: usize| v[2 + 3 * m + 3 * j + k];
    let mut s = [[ZERO; 3]; 3];
    for j in 0..m {
        for k in 0..3 {
            for l in 0..3 {
                s[k][l] += pj(j, k) * qj(j, l);
            }
        }
    }
    let (mut dp0, mut dq0) = (ZERO, ZERO);
    for (j, &xj) in x.iter().enumerate() {
        dp0 -= SQRT_2 * xj * pj(j, 2) * qj(j, 1);
        dq0 += SQRT_2 * xj * pj(j, 1) * qj(j, 0);
        let mm = coupling_matrix(r, xj, p0, q0, &s);
        for k in 0..3 {
            let mut dq = ZERO;
            let mut dp = ZERO;
            for l in 0..3 {
                dq += mm[k][l] * qj(j, l);
                dp -= pj(j, l) * mm[l][k];
            }
            out[2 + 3 * m + 3 * j + k] = dq;
            out[2 + 3 * j + k] = dp;
        }
    }
    out[0] = dp0;
    out[1] = dq0;
}

/// Right-hand side of the ODE system, as a state at the same r.
pub fn ode_rhs(state: &HamiltonianState, fam: &IntervalFamily) -> Result<HamiltonianState> {
    state.check(fam)?;
    let v = state.to_vec();
    let mut out = vec![ZERO; v.len()];
    rhs_into(state.r, fam.x(), &v, &mut out);
    Ok(HamiltonianState::from_slice(state.r, &out))
}

/// Removes the per-j trace by p_j ← p_j − (p_j·q_j)/(q_j·q̄_j) q̄_j.
pub fn project_to_manifold(state: &HamiltonianState) -> HamiltonianState {
    let mut out = state.clone();
    for (p, q) in out.p.iter_mut().zip(&state.q) {
        let t = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
        let nq: f64 = q.iter().map(|v| v.norm_sqr()).sum();
        if nq > 0.0 {
            for k in 0..3 {
                p[k] -= t / nq * q[k].conj();
            }
        }
    }
    out
}

/// Max deviation between `ode_rhs` and the Hamiltonian vector field
/// (q′ = ∂H/∂p, p′ = −∂H/∂q) from central differences of step `h`, relative
/// to the largest component of the field.
pub fn gradient_check(state: &HamiltonianState, fam: &IntervalFamily, h: f64) -> Result<f64> {
    state.check(fam)?;
    for (p, q) in state.p.iter().zip(&state.q) {
        let t = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
        let s: f64 = (0..3).map(|k| (p[k] * q[k]).norm()).sum();
        if t.norm() > 1e-10 * (1.0 + s) {
            return Err(LabError::Precondition(format!(
                "state is off the constraint manifold (trace {:e})",
                t.norm()
            )));
        }
    }
    let v = state.to_vec();
    let n = v.len();
    let m = state.m();
    let rhs = ode_rhs(state, fam)?.to_vec();
    let mut grad = vec![ZERO; n];
    let mut w = v.clone();
    for i in 0..n {
        w[i] = v[i] + h;
        let hp = hamiltonian(&HamiltonianState::from_slice(state.r, &w), fam)?;
        w[i] = v[i] - h;
        let hm = hamiltonian(&HamiltonianState::from_slice(state.r, &w), fam)?;
        w[i] = v[i];
        grad[i] = (hp - hm) / (2.0 * h);
    }
    let mut field = vec![ZERO; n];
    field[0] = -grad[1];
    field[1] = grad[0];
    for i in 0..3 * m {
        field[2 + i] = -grad[2 + 3 * m + i];
        field[2 + 3 * m + i] = grad[2 + i];
    }
    let scale = rhs.iter().chain(&field).map(|z| z.norm()).fold(1e-300, f64::max);
    Ok(rhs.iter().zip(&field).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale)
}

/// Leading large-r behaviour of the solution, assembled term by term.
pub fn init_large_r(r: f64, fam: &IntervalFamily, params: &PearceyParams) -> Result<HamiltonianState> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(LabError::Domain(format!("r must be positive, got {r}")));
    }
    let (x, u) = (fam.x(), fam.u());
    let xm = x[fam.m() - 1];
    if theta3(r * xm, params) > 1400.0 * 2f64.ln() {
        return Err(LabError::Range(format!("e^(θ₃/2) is not representable at r = {r}")));
    }
    let rho = params.rho;
    let s3 = 3f64.sqrt();
    let w: f64 = u.iter().zip(x).map(|(u, x)| u * x.cbrt() * x.cbrt()).sum();
    let lead = s3 / (2.0 * SQRT_2 * PI) * w * r.cbrt() * r.cbrt();
    let p0 = Complex64::new(lead + (rho.powi(3) / 54.0 + rho / 2.0) / SQRT_2, 0.0);
    let q0 = Complex64::new(-lead + (-rho.powi(3) / 54.0 + rho / 2.0) / SQRT_2, 0.0);
    let mut state = HamiltonianState { r, p0, q0, p: vec![], q: vec![] };
    let c = 1.0 / (3.0 * PI * I);
    for (jj, (&xj, &uj)) in x.iter().zip(u).enumerate() {
        let j = jj + 1;
        let a = amp_a(j, fam)?;
        let th = phase_theta(j, fam, r, params)?;
        let e = (0.5 * theta3(r * xj, params)).exp();
        let rr = (r * xj).cbrt();
        let sm = s3 / (2.0 * PI) * w / (xj.cbrt() * xj.cbrt());
        let (t1, t3) = (th - PI / 3.0, th + PI / 3.0);
        state.p.push([
            -c * e * rr * uj / a * (t1.cos() + sm * t3.cos()),
            c * e * uj / a * th.cos(),
            -c * e / rr * uj / a * t3.cos(),
        ]);
        state.q.push([
            2.0 * I / (e * rr) * a * t1.sin(),
            -2.0 * I / e * a * th.sin(),
            2.0 * I * rr * a / e * (t3.sin() - sm * t1.sin()),
        ]);
    }
    Ok(state)
}

/// 2S₃₁ − (ρ − √2(p₀ + q₀)).
pub fn trace_relation_gap(state: &HamiltonianState, params: &PearceyParams) -> Complex64 {
    let s = s_matrix(&state.p, &state.q);
    2.0 * s[2][0] - (params.rho - SQRT_2 * (state.p0 + state.q0))
}

/// Component groups for step control: p₀, q₀, then one group per 3-block.
pub(crate) fn block_groups(m: usize) -> Vec<usize> {
    let mut g = vec![0, 1];
    for b in 0..2 * m {
        g.extend([2 + b; 3]);
    }
    g
}

/// Adaptive RK5(4) flow of the system from `initial.r` to `r_target` with
/// relative tolerance `tol`, measured per component block.
pub fn flow(initial: &HamiltonianState, fam: &IntervalFamily, r_target: f64, tol: f64) -> Result<HamiltonianState> {
    initial.check(fam)?;
    if !(r_target > 0.0) || r_target == initial.r {
        return Err(LabError::InvalidArgument(format!(
            "target r = {r_target} must be positive and differ from {}",
            initial.r
        )));
    }
    let traj = flow_samples(initial, fam, &[r_target], tol)?;
    Ok(traj.into_iter().next().expect("one output"))
}

/// Flow sampled at `outputs` (monotone in the direction of integration).
pub fn flow_samples(
    initial: &HamiltonianState,
    fam: &IntervalFamily,
    outputs: &[f64],
    tol: f64,
) -> Result<Vec<HamiltonianState>> {
    initial.check(fam)?;
    let x = fam.x().to_vec();
    let mut ctl = StepControl::new(tol, 1e-300, block_groups(fam.m()));
    ctl.initial_step = Some(1e-3 * initial.r);
    let ys = dopri45(
        |r, y, d| {
            if r <= 0.0 {
                return Err(LabError::Domain("flow reached r = 0".into()));
            }
            rhs_into(r, &x, y, d);
            Ok(())
        },
        initial.r,
        &initial.to_vec(),
        outputs,
        &ctl,
    )?;
    Ok(ys.iter().zip(outputs).map(|(y, &r)| HamiltonianState::from_slice(r, y)).collect())
}

/// Relative residual of init_large_r in the ODE system: the largest, over one
/// oscillation period starting at r and over the p_j and q_j blocks, of
/// |ode_rhs − d/dr| / |d/dr| with d/dr by central differences.
pub fn asymptotic_residual(r: f64, fam: &IntervalFamily, params: &PearceyParams) -> Result<f64> {
    let x1 = fam.x()[0];
    let period = 2.0 * PI / (0.5 * 3f64.sqrt() * r.cbrt() * x1 * x1.cbrt());
    let samples = 64;
    let mut worst = 0.0f64;
    for i in 0..samples {
        let rr = r + period * i as f64 / samples as f64;
        worst = worst.max(pointwise_asymptotic_residual(rr, fam, params)?);
    }
    Ok(worst)
}

/// Same as [`asymptotic_residual`] at a single r.
pub fn pointwise_asymptotic_residual(r: f64, fam: &IntervalFamily, params: &PearceyParams) -> Result<f64> {
    let h = 1e-4 * r.cbrt().recip();
    let s = init_large_r(r, fam, params)?;
    let sp = init_large_r(r + h, fam, params)?;
    let sm = init_large_r(r - h, fam, params)?;
    let f = ode_rhs(&s, fam)?;
    let mut worst = 0.0f64;
    let blocks = |st: &HamiltonianState| -> Vec<[Complex64; 3]> { st.p.iter().chain(&st.q).copied().collect() };
    let (bp, bm, bf) = (blocks(&sp), blocks(&sm), blocks(&f));
    for b in 0..bf.len() {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..3 {
            let d = (bp[b][k] - bm[b][k]) / (2.0 * h);
            num += (bf[b][k] - d).norm_sqr();
            den += d.norm_sqr();
        }
        if den > 0.0 {
            worst = worst.max((num / den).sqrt());
        }
    }
    Ok(worst)
}

/// Result of the energy identity check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EnergyReport {
    /// max over interior samples of |LHS − RHS| / (|LHS| + |RHS| + |H|)
    pub max_relative: f64,
    pub max_absolute: f64,
}

/// Residual of p₀q₀′ + Σ p q′ − H = H + ¼ d/dr(2p₀q₀ + Σ[p₂q₂ + 2p₃q₃] − 3rH)
/// along sampled states, r-derivatives by central differences (five-point on
/// uniform samples, three-point otherwise).
pub fn energy_identity_check(trajectory: &[HamiltonianState], fam: &IntervalFamily) -> Result<EnergyReport> {
    let n = trajectory.len();
    if n < 3 {
        return Err(LabError::InvalidArgument(format!("need at least 3 samples, got {n}")));
    }
    for s in trajectory {
        s.check(fam)?;
    }
    let rs: Vec<f64> = trajectory.iter().map(|s| s.r).collect();
    let dr = rs[1] - rs[0];
    let uniform = n >= 5 && rs.windows(2).all(|w| ((w[1] - w[0]) - dr).abs() <= 1e-9 * dr.abs());
    let vecs: Vec<Vec<Complex64>> = trajectory.iter().map(|s| s.to_vec()).collect();
    let hs: Vec<Complex64> = trajectory.iter().map(|s| hamiltonian(s, fam)).collect::<Result<_>>()?;
    let gs: Vec<Complex64> = trajectory
        .iter()
        .zip(&hs)
        .map(|(s, h)| {
            let mut g = 2.0 * s.p0 * s.q0 - 3.0 * s.r * h;
            for (p, q) in s.p.iter().zip(&s.q) {
                g += p[1] * q[1] + 2.0 * p[2] * q[2];
            }
            g
        })
        .collect();
    let deriv = |f: &dyn Fn(usize) -> Complex64, i: usize| -> Complex64 {
        if uniform {
            (f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2)) / (12.0 * dr)
        } else {
            let (h1, h2) = (rs[i] - rs[i - 1], rs[i + 1] - rs[i]);
            (f(i + 1) * h1 * h1 - f(i - 1) * h2 * h2 + f(i) * (h2 * h2 - h1 * h1)) / (h1 * h2 * (h1 + h2))
        }
    };
    let pad = if uniform { 2 } else { 1 };
    let m = fam.m();
    let mut rep = EnergyReport { max_relative: 0.0, max_absolute: 0.0 };
    for i in pad..n - pad {
        let v = &vecs[i];
        let mut lhs = -hs[i];
        // q-components: q₀ at 1, q-blocks after the p-blocks
        lhs += v[0] * deriv(&|t| vecs[t][1], i);
        for c in 0..3 * m {
            lhs += v[2 + c] * deriv(&|t| vecs[t][2 + 3 * m + c], i);
        }
        let rhs = hs[i] + 0.25 * deriv(&|t| gs[t], i);
        let res = (lhs - rhs).norm();
        let scale = lhs.norm() + rhs.norm() + hs[i].norm();
        rep.max_absolute = rep.max_absolute.max(res);
        if scale > 0.0 {
            rep.max_relative = rep.max_relative.max(res / scale);
        }
    }
    Ok(rep)
}

/// Numerical ∂_r log F against 2·H from the large-r formula.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DlogFReport {
    pub r: f64,
    pub dlogf_num: f64,
    pub two_h_asympt: f64,
    pub abs_diff: f64,
}

/// Step of the central difference in r.
pub const DLOGF_STEP: f64 = 1e-3;

pub fn dlogf_cross_check(params: &PearceyParams, fam: &IntervalFamily, r: f64, n: usize) -> Result<DlogFReport> {
    let h = DLOGF_STEP;
    if !(r > h) {
        return Err(LabError::InvalidArgument(format!("r must exceed {h}, got {r}")));
    }
    let fp = log_gen_fun(params, fam, r + h, n)?.log_f;
    let fm = log_gen_fun(params, fam, r - h, n)?.log_f;
    let dlogf_num = (fp - fm) / (2.0 * h);
    let two_h_asympt = 2.0 * hamiltonian_asympt(fam, r, params)?;
    Ok(DlogFReport { r, dlogf_num, two_h_asympt, abs_diff: (dlogf_num - two_h_asympt).abs() })
}
