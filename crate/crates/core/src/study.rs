//! Convergence and robustness studies on the manufactured problem, rate
//! computation and table output.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::assembly::{assemble, PenaltyParams, SolutionTriple};
use crate::basis::{BasisQuantity, DgSpace};
use crate::error::{Error, Result};
use crate::errors::{compute_errors, ErrorReport};
use crate::mesh::{build_mesh, MeshFamily, MeshParams, TensorMesh};
use crate::problem::{ExactSolution, ManufacturedSolution};
use crate::projection::projection_error_report;
use crate::quadrature::DEFAULT_POINTS;
use crate::solver::{solve_system, FactorStats};

/// How observed rates are computed from consecutive errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// `log(e1/e2) / log(2 ln N1 / ln N2)`, for `N2 = 2 N1` on Shishkin meshes.
    ShishkinLog,
    /// `log2(e1/e2)`.
    PowerOf2,
    /// `log(e1/e2) / log(N2/N1)`.
    GeneralRatio,
}

impl RateMode {
    pub fn default_for(family: MeshFamily) -> Self {
        match family {
            MeshFamily::Shishkin => RateMode::ShishkinLog,
            MeshFamily::BakhvalovShishkin | MeshFamily::Bakhvalov => RateMode::PowerOf2,
        }
    }
}

/// Observed convergence rate between `(n1, e1)` and `(n2, e2)`.
pub fn rate(e1: f64, e2: f64, n1: usize, n2: usize, mode: RateMode) -> Result<f64> {
    if !(e1 > 0.0 && e2 > 0.0 && e1.is_finite() && e2.is_finite()) {
        return Err(Error::invalid(format!("rates need positive finite errors, got {e1}, {e2}")));
    }
    if n2 <= n1 || n1 < 2 {
        return Err(Error::invalid(format!("rates need 2 <= N1 < N2, got {n1}, {n2}")));
    }
    if matches!(mode, RateMode::ShishkinLog | RateMode::PowerOf2) && n2 != 2 * n1 {
        return Err(Error::invalid(format!("{mode:?} rates need N2 = 2 N1, got {n1}, {n2}")));
    }
    let ratio = (e1 / e2).ln();
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let r = match mode {
        RateMode::ShishkinLog => ratio / (2.0 * n1f.ln() / n2f.ln()).ln(),
        RateMode::PowerOf2 => ratio / std::f64::consts::LN_2,
        RateMode::GeneralRatio => ratio / (n2f / n1f).ln(),
    };
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::invalid(format!("rate undefined for N = {n1}, {n2}")))
    }
}

/// `6.9845e-03` style: four mantissa decimals and a signed two-digit exponent.
pub fn fmt_sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.4e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

pub fn fmt_rate(v: f64) -> String {
    format!("{v:.4}")
}

/// Parameters shared by all runs of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub family: MeshFamily,
    pub k: usize,
    /// Defaults to `k + 2`.
    pub sigma: Option<f64>,
    pub alpha: f64,
    pub delta: f64,
    pub lambda1: f64,
    /// Defaults to `epsilon`.
    pub lambda2: Option<f64>,
    pub allow_lambda2_below_eps: bool,
    pub quad_order: usize,
    pub n_list: Vec<usize>,
    pub epsilons: Vec<f64>,
    /// Defaults to [`RateMode::default_for`] the family.
    pub rate_mode: Option<RateMode>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            family: MeshFamily::Shishkin,
            k: 1,
            sigma: None,
            alpha: 1.0,
            delta: 1.4,
            lambda1: 0.0,
            lambda2: None,
            allow_lambda2_below_eps: false,
            quad_order: DEFAULT_POINTS,
            n_list: vec![4, 8, 16, 32, 64],
            epsilons: vec![1e-8],
            rate_mode: None,
        }
    }
}

impl StudyConfig {
    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(self.k as f64 + 2.0)
    }

    pub fn rate_mode(&self) -> RateMode {
        self.rate_mode.unwrap_or(RateMode::default_for(self.family))
    }

    pub fn mesh_params(&self, epsilon: f64, n: usize) -> MeshParams {
        MeshParams {
            epsilon,
            n,
            sigma: self.sigma(),
            alpha: self.alpha,
            delta: self.delta,
            family: self.family,
        }
    }

    pub fn penalty(&self, epsilon: f64) -> Result<PenaltyParams> {
        let l2 = self.lambda2.unwrap_or(epsilon);
        if self.allow_lambda2_below_eps {
            PenaltyParams::unchecked(self.lambda1, l2)
        } else {
            PenaltyParams::new(self.lambda1, l2, epsilon)
        }
    }

    /// Checks every `(epsilon, N)` combination before any work is done.
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::invalid("no N values given"));
        }
        if self.epsilons.is_empty() {
            return Err(Error::invalid("no epsilon values given"));
        }
        if self.k > 8 {
            return Err(Error::invalid(format!("degree must be at most 8, got {}", self.k)));
        }
        if !(1..=crate::quadrature::MAX_POINTS).contains(&self.quad_order) {
            return Err(Error::invalid(format!("bad quadrature order {}", self.quad_order)));
        }
        for &eps in &self.epsilons {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {eps}")));
            }
            self.penalty(eps)?;
            for &n in &self.n_list {
                self.mesh_params(eps, n).validate()?;
            }
        }
        Ok(())
    }
}

/// Result of one solve of the manufactured problem.
#[derive(Debug, Clone)]
pub struct Solved {
    pub mesh: TensorMesh,
    pub solution: SolutionTriple,
    pub report: ErrorReport,
    pub stats: FactorStats,
    pub assembly_time: Duration,
    pub total_time: Duration,
}

/// Builds the mesh, assembles, solves and measures the errors for one run.
pub fn solve_manufactured(cfg: &StudyConfig, epsilon: f64, n: usize) -> Result<Solved> {
    let wrap = |e: Error| Error::Run {
        n,
        epsilon,
        source: Box::new(e),
    };
    let t0 = Instant::now();
    let mesh = build_mesh(&cfg.mesh_params(epsilon, n)).map_err(wrap)?;
    let problem = ManufacturedSolution::new(epsilon).map_err(wrap)?;
    let pen = cfg.penalty(epsilon).map_err(wrap)?;
    let (solution, report, stats, assembly_time) = {
        let space = DgSpace::with_quadrature(&mesh, cfg.k, cfg.quad_order).map_err(wrap)?;
        let ta = Instant::now();
        let system = assemble(&problem, &space, pen).map_err(wrap)?;
        let assembly_time = ta.elapsed();
        let (solution, stats) = solve_system(&system).map_err(wrap)?;
        drop(system);
        let report = compute_errors(&space, &problem, pen, &solution, &problem).map_err(wrap)?;
        (solution, report, stats, assembly_time)
    };
    Ok(Solved {
        mesh,
        solution,
        report,
        stats,
        assembly_time,
        total_time: t0.elapsed(),
    })
}

/// One row of a [`RateTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub family: String,
    pub k: usize,
    pub epsilon: f64,
    pub n: usize,
    pub values: Vec<f64>,
    pub rates: Vec<Option<f64>>,
}

/// Errors and rates, one row per run.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub metrics: Vec<String>,
    pub rows: Vec<TableRow>,
}

pub const ERROR_METRICS: [&str; 3] = ["l2", "sc", "energy"];

impl RateTable {
    pub fn new(metrics: &[&str]) -> Self {
        RateTable {
            metrics: metrics.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, family: &str, k: usize, epsilon: f64, n: usize, values: Vec<f64>) {
        let rates = vec![None; values.len()];
        self.rows.push(TableRow {
            family: family.to_string(),
            k,
            epsilon,
            n,
            values,
            rates,
        });
    }

    /// Fills rates between consecutive rows of the same family, degree and
    /// epsilon. A rate that cannot be computed is left empty.
    pub fn compute_rates(&mut self, mode: RateMode) {
        for i in 0..self.rows.len() {
            let rates = if i == 0 {
                vec![None; self.metrics.len()]
            } else {
                let (prev, cur) = (&self.rows[i - 1], &self.rows[i]);
                if prev.family == cur.family && prev.k == cur.k && prev.epsilon == cur.epsilon {
                    prev.values
                        .iter()
                        .zip(&cur.values)
                        .map(|(&e1, &e2)| rate(e1, e2, prev.n, cur.n, mode).ok())
                        .collect()
                } else {
                    vec![None; self.metrics.len()]
                }
            };
            self.rows[i].rates = rates;
        }
    }

    /// Value of `metric` in the row with the given `epsilon` and `n`.
    pub fn value(&self, metric: &str, epsilon: f64, n: usize) -> Option<f64> {
        let c = self.metrics.iter().position(|m| m == metric)?;
        self.rows
            .iter()
            .find(|r| r.n == n && r.epsilon == epsilon)
            .map(|r| r.values[c])
    }

    /// Rate of `metric` arriving at row `(epsilon, n)`.
    pub fn rate_at(&self, metric: &str, epsilon: f64, n: usize) -> Option<f64> {
        let c = self.metrics.iter().position(|m| m == metric)?;
        self.rows
            .iter()
            .find(|r| r.n == n && r.epsilon == epsilon)
            .and_then(|r| r.rates[c])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,k,epsilon,N");
        for m in &self.metrics {
            let _ = write!(s, ",{m},{m}_rate");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{},{},{},{}", r.family, r.k, fmt_sci(r.epsilon), r.n);
            for (v, rt) in r.values.iter().zip(&r.rates) {
                let _ = write!(s, ",{},{}", fmt_sci(*v), rt.map(fmt_rate).unwrap_or_default());
            }
            s.push('\n');
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| family | k | epsilon | N |");
        let mut sep = String::from("|---|---|---|---|");
        for m in &self.metrics {
            let _ = write!(s, " {m} | rate |");
            sep.push_str("---|---|");
        }
        s.push('\n');
        s.push_str(&sep);
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "| {} | {} | {} | {} |", r.family, r.k, fmt_sci(r.epsilon), r.n);
            for (v, rt) in r.values.iter().zip(&r.rates) {
                let rt = rt.map(fmt_rate).unwrap_or_else(|| "--".to_string());
                let _ = write!(s, " {} | {} |", fmt_sci(*v), rt);
            }
            s.push('\n');
        }
        s
    }

    /// Parses the output of [`RateTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty table".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 4 || cols[..4] != ["family", "k", "epsilon", "N"] || (cols.len() - 4) % 2 != 0 {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut metrics = Vec::new();
        for pair in cols[4..].chunks(2) {
            if pair[1] != format!("{}_rate", pair[0]) {
                return Err(Error::Parse(format!("expected `{}_rate`, found `{}`", pair[0], pair[1])));
            }
            metrics.push(pair[0].to_string());
        }
        let num = |s: &str| -> Result<f64> { f64::from_str(s).map_err(|e| Error::Parse(format!("`{s}`: {e}"))) };
        let mut rows = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(Error::Parse(format!("expected {} fields: `{line}`", cols.len())));
            }
            let mut values = Vec::new();
            let mut rates = Vec::new();
            for pair in f[4..].chunks(2) {
                values.push(num(pair[0])?);
                rates.push(if pair[1].is_empty() { None } else { Some(num(pair[1])?) });
            }
            rows.push(TableRow {
                family: f[0].to_string(),
                k: f[1].parse().map_err(|e| Error::Parse(format!("k `{}`: {e}", f[1])))?,
                epsilon: num(f[2])?,
                n: f[3].parse().map_err(|e| Error::Parse(format!("N `{}`: {e}", f[3])))?,
                values,
                rates,
            });
        }
        Ok(RateTable { metrics, rows })
    }
}

/// Solves for every `epsilon` in `cfg` and every `N`, in order, and reports
/// `l2`, `sc`, `energy` with rates.
pub fn run_convergence(cfg: &StudyConfig) -> Result<RateTable> {
    run_convergence_with(cfg, |_| {})
}

/// As [`run_convergence`], calling `progress` after each run.
pub fn run_convergence_with(cfg: &StudyConfig, mut progress: impl FnMut(&Solved)) -> Result<RateTable> {
    cfg.validate()?;
    let mut table = RateTable::new(&ERROR_METRICS);
    for &eps in &cfg.epsilons {
        for &n in &cfg.n_list {
            let s = solve_manufactured(cfg, eps, n)?;
            progress(&s);
            let r = &s.report;
            table.push(cfg.family.as_str(), cfg.k, eps, n, vec![r.l2, r.sc, r.energy]);
        }
    }
    table.compute_rates(cfg.rate_mode());
    Ok(table)
}

/// Errors for each epsilon at fixed `N`, without rates.
pub fn run_robustness(cfg: &StudyConfig) -> Result<RateTable> {
    cfg.validate()?;
    let mut table = RateTable::new(&ERROR_METRICS);
    for &n in &cfg.n_list {
        for &eps in &cfg.epsilons {
            let r = solve_manufactured(cfg, eps, n)?.report;
            table.push(cfg.family.as_str(), cfg.k, eps, n, vec![r.l2, r.sc, r.energy]);
        }
    }
    Ok(table)
}

/// Rates of the `l2` error over general `N` sequences for several values of
/// `sqrt(eps)`, on the Bakhvalov-Shishkin mesh unless `cfg` says otherwise.
pub fn run_regime_study(cfg: &StudyConfig, sqrt_eps: &[f64]) -> Result<RateTable> {
    let mut c = cfg.clone();
    c.epsilons = sqrt_eps.iter().map(|s| s * s).collect();
    c.rate_mode = Some(cfg.rate_mode.unwrap_or(RateMode::GeneralRatio));
    run_convergence(&c)
}

/// Projection errors of the exact solution with rates.
pub fn run_projection_rates(cfg: &StudyConfig) -> Result<RateTable> {
    cfg.validate()?;
    let mut table: Option<RateTable> = None;
    for &eps in &cfg.epsilons {
        let exact = ManufacturedSolution::new(eps)?;
        for &n in &cfg.n_list {
            let mesh = build_mesh(&cfg.mesh_params(eps, n))?;
            let space = DgSpace::with_quadrature(&mesh, cfg.k, cfg.quad_order)?;
            let rep = projection_error_report(&space, &exact);
            let metrics = rep.metrics();
            let t = table.get_or_insert_with(|| RateTable::new(&metrics.iter().map(|m| m.0).collect::<Vec<_>>()));
            t.push(cfg.family.as_str(), cfg.k, eps, n, metrics.iter().map(|m| m.1).collect());
        }
    }
    let mut table = table.expect("at least one run");
    table.compute_rates(cfg.rate_mode());
    Ok(table)
}

/// `x,y,U,u,U-u` on an `m x m` equispaced grid of the closed unit square.
pub fn grid_dump<E: ExactSolution + ?Sized>(
    space: &DgSpace,
    solution: &SolutionTriple,
    exact: &E,
    m: usize,
) -> Result<String> {
    if m < 2 {
        return Err(Error::invalid(format!("grid dump needs at least 2 points per direction, got {m}")));
    }
    let mesh = space.mesh();
    let nb = space.dofs_per_element();
    let mut s = String::from("x,y,U,u,U-u\n");
    for j in 0..m {
        let y = j as f64 / (m - 1) as f64;
        let jy = mesh.locate_y(y);
        for i in 0..m {
            let x = i as f64 / (m - 1) as f64;
            let ix = mesh.locate_x(x);
            let e = space.element_index(ix, jy);
            let phi = space.eval_basis(ix, jy, x, y, BasisQuantity::Value)?;
            let uh: f64 = phi.iter().zip(&solution.u[e * nb..(e + 1) * nb]).map(|(a, b)| a * b).sum();
            let u = exact.u(x, y);
            let _ = writeln!(s, "{x:.6},{y:.6},{uh:.10e},{u:.10e},{:.10e}", uh - u);
        }
    }
    Ok(s)
}
