//! Command-line front end: evaluations and r-sweeps written as CSV or JSON.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::asympt::{clt_log_mgf, log_gen_fun_asympt, stats_asympt};
use crate::fredholm::{counting_stats, log_gen_fun};
use crate::hamsys::{
    asymptotic_residual, gradient_check, hamiltonian, init_large_r, project_to_manifold, trace_relation_gap,
};
use crate::kernel::{kernel_diag, kernel_direct};
use crate::{IntervalFamily, LabError, PearceyParams, Result};

#[derive(Debug, Parser)]
#[command(name = "pearcey-lab", version, about = "Pearcey process generating functions, asymptotics and Hamiltonian checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel values at the points ±r·x_j
    Kernel(CommonArgs),
    /// log F(r x, u) from the Fredholm determinant
    Genfun(CommonArgs),
    /// Large-r expansion of log F, term by term
    Asympt(CommonArgs),
    /// Numerical log F against the large-r expansion
    Compare(CommonArgs),
    /// Checks on the large-r data of the Hamiltonian system
    OdeCheck(CommonArgs),
    /// Counting statistics (mean, variance, covariance), numeric and asymptotic
    Stats(CommonArgs),
    /// Asymptotic moment generating value at the CLT scaling of the weights
    Clt(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Cusp parameter ρ
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho: f64,
    /// Endpoints x_1 < ... < x_m, comma separated
    #[arg(long, default_value = "1")]
    pub x: String,
    /// Weights u_j, comma separated (defaults to all ones)
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// CLT coefficients a_j, comma separated (defaults to all ones)
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Single scale r
    #[arg(long, conflicts_with = "r_grid")]
    pub r: Option<f64>,
    /// Sweep start:stop:step, stop included when it lands on the grid
    #[arg(long = "r-grid")]
    pub r_grid: Option<String>,
    /// Gauss–Legendre nodes per panel (doubled internally for the error estimate)
    #[arg(long, default_value_t = 60)]
    pub nodes: usize,
    /// Output path, "-" for standard output
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for sweeps
    #[arg(long, env = "PEARCEY_LAB_JOBS")]
    pub jobs: Option<usize>,
    /// Fail instead of doubling the node count when the doubling check fails
    #[arg(long)]
    pub no_escalate: bool,
    /// Write null instead of the elapsed time in JSON metadata
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Kernel,
    Genfun,
    Asympt,
    Compare,
    OdeCheck,
    Stats,
    Clt,
}

/// Validated run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub rho: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub a: Vec<f64>,
    pub r: Vec<f64>,
    pub nodes: usize,
    pub out: String,
    pub format: Format,
    #[serde(skip)]
    pub jobs: Option<usize>,
    pub escalate: bool,
    #[serde(skip)]
    pub timing: bool,
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| LabError::InvalidArgument(format!("not a finite number: {t:?}")))
        })
        .collect()
}

/// `start:stop:step`, inclusive of stop when it lands on the grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts = parse_list(&s.replace(':', ","))?;
    let [start, stop, step] = parts[..] else {
        return Err(LabError::InvalidArgument(format!("r-grid must be start:stop:step, got {s:?}")));
    };
    if !(step > 0.0) || stop < start {
        return Err(LabError::InvalidArgument(format!("r-grid needs step > 0 and stop >= start, got {s:?}")));
    }
    let span = (stop - start) / step;
    let mut count = (span + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(LabError::InvalidArgument("r-grid has more than 100000 points".into()));
    }
    if count == 0 {
        count = 1;
    }
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let (command, a) = match &cli.command {
            Command::Kernel(a) => (CommandKind::Kernel, a),
            Command::Genfun(a) => (CommandKind::Genfun, a),
            Command::Asympt(a) => (CommandKind::Asympt, a),
            Command::Compare(a) => (CommandKind::Compare, a),
            Command::OdeCheck(a) => (CommandKind::OdeCheck, a),
            Command::Stats(a) => (CommandKind::Stats, a),
            Command::Clt(a) => (CommandKind::Clt, a),
        };
        PearceyParams::new(a.rho)?;
        let x = parse_list(&a.x)?;
        let m = x.len();
        let u = match &a.u {
            Some(s) => parse_list(s)?,
            None => vec![1.0; m],
        };
        let coef = match &a.a {
            Some(s) => parse_list(s)?,
            None => vec![1.0; m],
        };
        if u.len() != m || coef.len() != m {
            return Err(LabError::InvalidArgument(format!(
                "--x has {m} entries but --u has {} and --a has {}",
                u.len(),
                coef.len()
            )));
        }
        IntervalFamily::new(x.clone(), u.clone())?;
        if a.nodes < 4 || 2 * a.nodes > 512 {
            return Err(LabError::InvalidArgument(format!("--nodes must lie in 4..=256, got {}", a.nodes)));
        }
        let r = match (&a.r, &a.r_grid) {
            (Some(r), None) => vec![*r],
            (None, Some(g)) => parse_grid(g)?,
            (None, None) if command == CommandKind::Kernel => vec![1.0],
            (None, None) => return Err(LabError::InvalidArgument("one of --r or --r-grid is required".into())),
            (Some(_), Some(_)) => return Err(LabError::InvalidArgument("--r and --r-grid are exclusive".into())),
        };
        if r.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(LabError::InvalidArgument("r values must be positive".into()));
        }
        if command == CommandKind::Clt && r.iter().any(|v| *v <= std::f64::consts::E) {
            return Err(LabError::InvalidArgument("clt needs r > e".into()));
        }
        if a.jobs == Some(0) {
            return Err(LabError::InvalidArgument("--jobs must be at least 1".into()));
        }
        Ok(Self {
            command,
            rho: a.rho,
            x,
            u,
            a: coef,
            r,
            nodes: a.nodes,
            out: a.out.display().to_string(),
            format: a.format,
            jobs: a.jobs,
            escalate: !a.no_escalate,
            timing: !a.no_timing,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

/// A float with at most 15 significant digits, like C's `%.15g`.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.14e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_float(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    nodes_fine: usize,
}

fn columns(cmd: CommandKind) -> Vec<&'static str> {
    match cmd {
        CommandKind::Kernel => vec!["r", "x", "y", "kernel"],
        CommandKind::Genfun => vec!["r", "log_F", "est_error", "nodes_per_panel"],
        CommandKind::Asympt => vec!["r", "mu_sum", "sigma_sum", "cross_sum", "barnes_sum", "total"],
        CommandKind::Compare => vec!["r", "logF_num", "logF_asy", "abs_diff"],
        CommandKind::OdeCheck => vec![
            "r",
            "hamiltonian",
            "hamiltonian_asympt",
            "constraint_residual",
            "gradient_check",
            "asymptotic_residual",
            "trace_relation_gap",
        ],
        CommandKind::Stats => vec!["r", "quantity", "j", "k", "numeric", "asymptotic"],
        CommandKind::Clt => vec!["r", "log_mgf", "target", "abs_diff"],
    }
}

// runs `f` at n, doubling on convergence failure when allowed
fn escalating<T>(n: usize, allow: bool, mut f: impl FnMut(usize) -> Result<T>) -> Result<(T, usize)> {
    let mut n = n;
    loop {
        match f(n) {
            Ok(v) => return Ok((v, n)),
            Err(LabError::Convergence(msg)) => {
                if !allow || 4 * n > 512 {
                    return Err(LabError::Convergence(msg));
                }
                n *= 2;
            }
            Err(e) => return Err(e),
        }
    }
}

fn rows_at(cfg: &RunConfig, r: f64) -> Result<(Vec<Vec<Cell>>, usize)> {
    let params = PearceyParams::new(cfg.rho)?;
    let fam = IntervalFamily::new(cfg.x.clone(), cfg.u.clone())?;
    let n = cfg.nodes;
    let num = Cell::Num;
    Ok(match cfg.command {
        CommandKind::Kernel => {
            let mut pts: Vec<f64> = cfg.x.iter().rev().map(|v| -r * v).collect();
            pts.extend(cfg.x.iter().map(|v| r * v));
            let mut rows = vec![];
            for &a in &pts {
                for &b in &pts {
                    let k = if a == b { kernel_diag(a, &params)? } else { kernel_direct(a, b, &params)? };
                    rows.push(vec![num(r), num(a), num(b), num(k)]);
                }
            }
            (rows, 0)
        }
        CommandKind::Genfun => {
            let (g, used) = escalating(n, cfg.escalate, |n| log_gen_fun(&params, &fam, r, n))?;
            (vec![vec![num(r), num(g.log_f), num(g.est_error), Cell::Int(g.nodes_per_panel as i64)]], 2 * used)
        }
        CommandKind::Asympt => {
            let b = log_gen_fun_asympt(&params, &fam, r)?;
            (vec![vec![num(r), num(b.mu_sum), num(b.sigma_sum), num(b.cross_sum), num(b.barnes_sum), num(b.total)]], 0)
        }
        CommandKind::Compare => {
            let (g, used) = escalating(n, cfg.escalate, |n| log_gen_fun(&params, &fam, r, n))?;
            let b = log_gen_fun_asympt(&params, &fam, r)?;
            (vec![vec![num(r), num(g.log_f), num(b.total), num((g.log_f - b.total).abs())]], 2 * used)
        }
        CommandKind::OdeCheck => {
            let s = init_large_r(r, &fam, &params)?;
            let h = hamiltonian(&s, &fam)?;
            let ha = crate::asympt::hamiltonian_asympt(&fam, r, &params)?;
            let g = gradient_check(&project_to_manifold(&s), &fam, 1e-6 * scale_of(&s))?;
            let res = asymptotic_residual(r, &fam, &params)?;
            let gap = trace_relation_gap(&s, &params).norm();
            (vec![vec![num(r), num(h.re), num(ha), num(s.constraint_residual()), num(g), num(res), num(gap)]], 0)
        }
        CommandKind::Stats => {
            let (st, used) = escalating(n, cfg.escalate, |n| counting_stats(&params, &cfg.x, r, n, 2))?;
            let asy = stats_asympt(&cfg.x, r, &params)?;
            let var = st.var.as_ref().expect("order 2");
            let cov = st.cov.as_ref().expect("order 2");
            let mut rows = vec![];
            for j in 0..cfg.x.len() {
                let jj = Cell::Int(j as i64 + 1);
                rows.push(vec![num(r), Cell::Text("mean".into()), jj.clone(), jj.clone(), num(st.mean[j]), num(asy.mean[j])]);
                rows.push(vec![num(r), Cell::Text("var".into()), jj.clone(), jj, num(var[j]), num(asy.var[j])]);
            }
            for j in 0..cfg.x.len() {
                for k in j + 1..cfg.x.len() {
                    rows.push(vec![
                        num(r),
                        Cell::Text("cov".into()),
                        Cell::Int(j as i64 + 1),
                        Cell::Int(k as i64 + 1),
                        num(cov[j][k]),
                        num(asy.cov[j][k]),
                    ]);
                }
            }
            (rows, 2 * used)
        }
        CommandKind::Clt => {
            let v = clt_log_mgf(&params, &cfg.x, &cfg.a, r)?;
            let target: f64 = cfg.a.iter().map(|a| 0.5 * a * a).sum();
            (vec![vec![num(r), num(v), num(target), num((v - target).abs())]], 0)
        }
    })
}

// root-mean-square coordinate size, so the difference step is relative
fn scale_of(s: &crate::hamsys::HamiltonianState) -> f64 {
    let v = s.to_vec();
    (v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64).sqrt().max(1e-300)
}

fn evaluate(cfg: &RunConfig) -> Result<Table> {
    let work = || -> Result<Vec<(Vec<Vec<Cell>>, usize)>> { cfg.r.par_iter().map(|&r| rows_at(cfg, r)).collect() };
    let parts = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| LabError::InvalidArgument(format!("cannot start {j} workers: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let nodes_fine = parts.iter().map(|p| p.1).max().unwrap_or(0);
    Ok(Table { columns: columns(cfg.command), rows: parts.into_iter().flat_map(|p| p.0).collect(), nodes_fine })
}

fn render(cfg: &RunConfig, t: &Table, elapsed_ms: Option<f64>) -> Result<String> {
    match cfg.format {
        Format::Csv => {
            let mut s = t.columns.join(",");
            s.push('\n');
            for row in &t.rows {
                s.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                s.push('\n');
            }
            Ok(s)
        }
        Format::Json => {
            let rows: Vec<Value> = t
                .rows
                .iter()
                .map(|row| {
                    let mut o = Map::new();
                    for (c, v) in t.columns.iter().zip(row) {
                        o.insert((*c).to_string(), v.json());
                    }
                    Value::Object(o)
                })
                .collect();
            let meta = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "timing_ms": elapsed_ms,
                "nodes": cfg.nodes,
                "nodes_fine": t.nodes_fine,
            });
            let doc = json!({ "config": cfg, "rows": rows, "meta": meta });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| LabError::Numeric(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Evaluates the configuration and returns the encoded table.
pub fn run_to_string(cfg: &RunConfig) -> Result<String> {
    let t0 = Instant::now();
    let table = evaluate(cfg)?;
    let elapsed = cfg.timing.then(|| t0.elapsed().as_secs_f64() * 1e3);
    render(cfg, &table, elapsed)
}

/// Runs a validated configuration; diagnostics go to standard error.
pub fn run(cfg: &RunConfig) -> i32 {
    let text = match run_to_string(cfg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("pearcey-lab: {e}");
            return e.exit_code();
        }
    };
    let written = if cfg.out == "-" {
        std::io::stdout().lock().write_all(text.as_bytes())
    } else {
        std::fs::write(&cfg.out, text.as_bytes())
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("pearcey-lab: cannot write {}: {e}", cfg.out);
            2
        }
    }
}

/// Parses process arguments and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match RunConfig::from_cli(&cli) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("pearcey-lab: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(1.5), "1.5");
        assert_eq!(fmt_float(-2.0), "-2");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333333");
        assert_eq!(fmt_float(1.234e-9), "1.234e-09");
        assert_eq!(fmt_float(6.02e23), "6.02e+23");
        assert_eq!(fmt_float(123456.789), "123456.789");
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("4:12:2").unwrap(), vec![4.0, 6.0, 8.0, 10.0, 12.0]);
        assert_eq!(parse_grid("1:2:0.3").unwrap().len(), 4);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:2:0").is_err());
    }
}
