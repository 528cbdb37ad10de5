//! Nyström evaluation of the multi-interval generating function
//! F(r x, u) = det(1 - K̃) and finite-difference counting statistics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::kernel::{balanced_diag, balanced_offdiag};
use crate::quad::gauss_legendre;
use crate::special::scaled_point;
use crate::{Complex64, LabError, PearceyParams, Result};

/// Largest accepted change of log F under node doubling.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Ordered endpoints `0 < x_1 < ... < x_m` with weights `u_j` and the derived
/// constants s_j = e^{u_j + ... + u_m}, 𝔰_j = (s_{j+1} - s_j)/(2πi), β_j = u_j/(2πi).
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFamily {
    x: Vec<f64>,
    u: Vec<f64>,
    s: Vec<f64>,
}

impl IntervalFamily {
    pub fn new(x: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(LabError::InvalidArgument("at least one endpoint is required".into()));
        }
        if x.len() != u.len() {
            return Err(LabError::InvalidArgument(format!(
                "{} endpoints but {} weights",
                x.len(),
                u.len()
            )));
        }
        if x.iter().chain(&u).any(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument("endpoints and weights must be finite".into()));
        }
        if x[0] <= 0.0 {
            return Err(LabError::InvalidArgument(format!("endpoints must be positive, got {}", x[0])));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidArgument("endpoints must be strictly increasing".into()));
        }
        let m = x.len();
        let mut s = vec![1.0; m + 1];
        let mut acc = 0.0;
        for j in (0..m).rev() {
            acc += u[j];
            s[j] = acc.exp();
        }
        Ok(Self { x, u, s })
    }

    /// Endpoints with all weights zero.
    pub fn endpoints(x: Vec<f64>) -> Result<Self> {
        let m = x.len();
        Self::new(x, vec![0.0; m])
    }

    pub fn with_u(&self, u: Vec<f64>) -> Result<Self> {
        Self::new(self.x.clone(), u)
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// s_j for j = 1..=m+1 (one-based, s_{m+1} = 1).
    pub fn s(&self, j: usize) -> f64 {
        self.s[j - 1]
    }

    pub fn frak_s(&self, j: usize) -> Complex64 {
        (self.s(j + 1) - self.s(j)) / Complex64::new(0.0, 2.0 * PI)
    }

    pub fn beta(&self, j: usize) -> Complex64 {
        self.u[j - 1] / Complex64::new(0.0, 2.0 * PI)
    }

    /// The weight 1 - s_j carried by the interval A_j.
    pub fn factors(&self) -> Vec<f64> {
        self.s[..self.m()].iter().map(|s| 1.0 - s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GenFunResult {
    pub log_f: f64,
    pub r: f64,
    pub nodes_per_panel: usize,
    pub est_error: f64,
}

/// Mapped Gauss–Legendre nodes on the 2m−1 panels of (−r x_m, r x_m).
#[derive(Debug, Clone)]
pub struct NystromGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// zero-based interval index j with the node in r·A_{j+1}
    pub interval: Vec<usize>,
}

impl NystromGrid {
    pub fn new(x: &[f64], r: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(LabError::InvalidArgument(format!("need at least 4 nodes per panel, got {n}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(LabError::InvalidArgument(format!("r must be positive, got {r}")));
        }
        let rule = gauss_legendre(n)?;
        let m = x.len();
        let mut panels = Vec::with_capacity(2 * m - 1);
        for j in (1..m).rev() {
            panels.push((-r * x[j], -r * x[j - 1], j));
        }
        panels.push((-r * x[0], r * x[0], 0));
        for j in 1..m {
            panels.push((r * x[j - 1], r * x[j], j));
        }
        let mut grid = Self { nodes: vec![], weights: vec![], interval: vec![] };
        for (a, b, j) in panels {
            for (t, w) in rule.mapped(a, b) {
                grid.nodes.push(t);
                grid.weights.push(w);
                grid.interval.push(j);
            }
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Kernel at the grid nodes up to the similarity e^{λ(t_a) − λ(t_b)}, which
/// leaves every determinant unchanged. Columns with `need[j] == false` are zero.
fn balanced_kernel_matrix(grid: &NystromGrid, rho: f64, need: &[bool]) -> Result<DMatrix<Complex64>> {
    let pts: Vec<_> = grid.nodes.par_iter().map(|&t| scaled_point(t, rho)).collect::<Result<_>>()?;
    let n = grid.len();
    let cols: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|b| {
            if !need[grid.interval[b]] {
                return vec![Complex64::new(0.0, 0.0); n];
            }
            (0..n)
                .map(|a| if a == b { balanced_diag(&pts[a]) } else { balanced_offdiag(&pts[a], &pts[b], rho) })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |a, b| cols[b][a]))
}

fn weighted(kmat: &DMatrix<Complex64>, grid: &NystromGrid, factors: &[f64]) -> DMatrix<Complex64> {
    let mut w = kmat.clone();
    for (b, mut col) in w.column_iter_mut().enumerate() {
        col *= Complex64::new(factors[grid.interval[b]] * grid.weights[b], 0.0);
    }
    w
}

/// log det(I − W) by partial-pivoting LU, real part after checking the phase.
fn log_det_one_minus(w: &DMatrix<Complex64>) -> Result<f64> {
    let n = w.nrows();
    let a = DMatrix::<Complex64>::identity(n, n) - w;
    let lu = a.lu();
    let u = lu.u();
    let mut log = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let d = u[(k, k)];
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return Err(LabError::Numeric("singular or non-finite determinant".into()));
        }
        log += d.ln();
    }
    if lu.p().determinant::<f64>() < 0.0 {
        log += Complex64::new(0.0, PI);
    }
    let phase = (log.im + PI).rem_euclid(2.0 * PI) - PI;
    if !log.re.is_finite() {
        return Err(LabError::Numeric("non-finite determinant".into()));
    }
    if phase.abs() > 1e-8 {
        return Err(LabError::Numeric(format!("determinant is not positive real (phase {phase:e})")));
    }
    Ok(log.re)
}

/// The discretised operator W with entries K(t_a, t_b)(1 − s_{j(b)}) w_b, up to the
/// diagonal similarity e^{λ(t_a) − λ(t_b)} (λ = −θ₃(|t|)/2) that keeps entries
/// representable for large r. Determinants are identical.
pub fn build_weighted_matrix(
    params: &PearceyParams,
    fam: &IntervalFamily,
    r: f64,
    n: usize,
) -> Result<DMatrix<Complex64>> {
    let grid = NystromGrid::new(fam.x(), r, n)?;
    let factors = fam.factors();
    let need: Vec<bool> = factors.iter().map(|f| *f != 0.0).collect();
    if need.iter().all(|b| !b) {
        return Ok(DMatrix::zeros(grid.len(), grid.len()));
    }
    let k = balanced_kernel_matrix(&grid, params.rho, &need)?;
    Ok(weighted(&k, &grid, &factors))
}

/// log F at a single resolution `n`.
pub fn log_gen_fun_fixed(params: &PearceyParams, fam: &IntervalFamily, r: f64, n: usize) -> Result<f64> {
    let w = build_weighted_matrix(params, fam, r, n)?;
    if w.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    log_det_one_minus(&w)
}

/// log F at `n` and `2n` nodes per panel; the finer value is returned.
pub fn log_gen_fun(params: &PearceyParams, fam: &IntervalFamily, r: f64, n: usize) -> Result<GenFunResult> {
    let coarse = log_gen_fun_fixed(params, fam, r, n)?;
    let fine = log_gen_fun_fixed(params, fam, r, 2 * n)?;
    let est_error = (fine - coarse).abs();
    if est_error > CONVERGENCE_TOL {
        return Err(LabError::Convergence(format!(
            "log F changed by {est_error:e} between {n} and {} nodes per panel at r = {r}",
            2 * n
        )));
    }
    Ok(GenFunResult { log_f: fine, r, nodes_per_panel: 2 * n, est_error })
}

/// Finite-difference counting statistics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CountingStats {
    pub x: Vec<f64>,
    pub r: f64,
    pub mean: Vec<f64>,
    /// present for order 2
    pub var: Option<Vec<f64>>,
    /// cov[j][k], j < k (diagonal holds the variance); present for order 2
    pub cov: Option<Vec<Vec<f64>>>,
    pub est_error: f64,
}

/// Step of the u-differences; one Richardson level uses h and h/2.
pub const STATS_STEP: f64 = 1e-2;

// log F as a function of a common weight vector, with the kernel matrix
// assembled once per resolution
struct Layout {
    x: Vec<f64>,
    coarse: (NystromGrid, DMatrix<Complex64>),
    fine: (NystromGrid, DMatrix<Complex64>),
}

impl Layout {
    fn new(x: Vec<f64>, r: f64, rho: f64, n: usize) -> Result<Self> {
        let need = vec![true; x.len()];
        let build = |n: usize| -> Result<(NystromGrid, DMatrix<Complex64>)> {
            let g = NystromGrid::new(&x, r, n)?;
            let k = balanced_kernel_matrix(&g, rho, &need)?;
            Ok((g, k))
        };
        let coarse = build(n)?;
        let fine = build(2 * n)?;
        Ok(Self { x, coarse, fine })
    }

    /// (log F at 2n, |change from n|)
    fn eval(&self, u: &[f64]) -> Result<(f64, f64)> {
        let fam = IntervalFamily::new(self.x.clone(), u.to_vec())?;
        let f = fam.factors();
        let a = log_det_one_minus(&weighted(&self.coarse.1, &self.coarse.0, &f))?;
        let b = log_det_one_minus(&weighted(&self.fine.1, &self.fine.0, &f))?;
        let err = (a - b).abs();
        if err > CONVERGENCE_TOL {
            return Err(LabError::Convergence(format!(
                "log F changed by {err:e} under node doubling (x = {:?})",
                self.x
            )));
        }
        Ok((b, err))
    }

    /// Richardson-extrapolated first and second derivatives of g(h) = log F(h·dir).
    fn derivatives(&self, dir: &[f64], err: &mut f64) -> Result<(f64, f64)> {
        let mut f = |h: f64| -> Result<f64> {
            let u: Vec<f64> = dir.iter().map(|d| d * h).collect();
            let (v, e) = self.eval(&u)?;
            *err = err.max(e);
            Ok(v)
        };
        let h = STATS_STEP;
        let (fp, fm, fp2, fm2) = (f(h)?, f(-h)?, f(h / 2.0)?, f(-h / 2.0)?);
        let d1 = |a: f64, b: f64, h: f64| (a - b) / (2.0 * h);
        let d2 = |a: f64, b: f64, h: f64| (a + b) / (h * h);
        let first = (4.0 * d1(fp2, fm2, h / 2.0) - d1(fp, fm, h)) / 3.0;
        let second = (4.0 * d2(fp2, fm2, h / 2.0) - d2(fp, fm, h)) / 3.0;
        Ok((first, second))
    }
}

/// Mean per endpoint (order 1) plus variances and pairwise covariances (order 2)
/// of the counts N(r x_j), by differences of log F in the weights.
pub fn counting_stats(params: &PearceyParams, x: &[f64], r: f64, n: usize, order: usize) -> Result<CountingStats> {
    if !(order == 1 || order == 2) {
        return Err(LabError::InvalidArgument(format!("order must be 1 or 2, got {order}")));
    }
    IntervalFamily::endpoints(x.to_vec())?;
    let m = x.len();
    let mut err = 0.0f64;
    let singles: Vec<Layout> = x
        .iter()
        .map(|&xj| Layout::new(vec![xj], r, params.rho, n))
        .collect::<Result<_>>()?;
    let mut mean = vec![0.0; m];
    let mut var = vec![0.0; m];
    for j in 0..m {
        let (d1, d2) = singles[j].derivatives(&[1.0], &mut err)?;
        mean[j] = d1;
        var[j] = d2;
    }
    if order == 1 {
        return Ok(CountingStats { x: x.to_vec(), r, mean, var: None, cov: None, est_error: err });
    }
    let mut cov = vec![vec![0.0; m]; m];
    for j in 0..m {
        cov[j][j] = var[j];
        for k in j + 1..m {
            let pair = Layout::new(vec![x[j], x[k]], r, params.rho, n)?;
            let (_, dp) = pair.derivatives(&[1.0, 1.0], &mut err)?;
            // ∂²_u log(F(pair,(u,u)) / (F(x_j,u) F(x_k,u))) = 2 Cov
            let c = 0.5 * (dp - var[j] - var[k]);
            cov[j][k] = c;
            cov[k][j] = c;
        }
    }
    Ok(CountingStats { x: x.to_vec(), r, mean, var: Some(var), cov: Some(cov), est_error: err })
}
