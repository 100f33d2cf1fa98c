//! Convergence studies: run a solver over a mesh ladder and tabulate errors and
//! observed orders.
//!
//! A study is described by a flat `key = value` file, for example
//!
//! ```text
//! dimension = 1
//! scheme = l2sigma
//! problem = example1
//! alpha = 0.3, 0.6
//! beta = 1.5
//! vary = space
//! fixed = 0.001        # τ when varying space, h when varying time
//! ladder = 1/8, 1/16, 1/32
//! ```
//!
//! Mesh values are step sizes; `1/8`, `2^-3`, `1/2^3` and `0.125` are all accepted.
//! In 1D the error is measured against the exact solution. In 2D the error at rung `h`
//! (or `τ`) compares the solutions at `2h` and `h`, so every rung costs one extra
//! coarser solve at the top of the ladder.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{arg_err, Error, Result};
use crate::linalg::CgOptions;
use crate::problems::{example1_problem, example2_problem};
use crate::solver1d::{final_error_1d, solve_1d};
use crate::solver2d::{error_e_h, error_f_tau, solve_2d, Trajectory2D, DEFAULT_H_REF};
use crate::stepping::SolveOptions;
use crate::temporal::Scheme;

/// Environment variable capping the number of concurrent study cells.
pub const THREADS_ENV: &str = "ULTRASLOW_FDE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vary {
    Space,
    Time,
}

impl FromStr for Vary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "space" | "h" => Ok(Vary::Space),
            "time" | "tau" => Ok(Vary::Time),
            other => Err(Error::Parse(format!("vary must be space or time, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    Example1,
    Example2,
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "example1" => Ok(ProblemId::Example1),
            "example2" => Ok(ProblemId::Example2),
            other => Err(Error::Parse(format!("unknown problem `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub dimension: usize,
    pub scheme: Scheme,
    pub problem: ProblemId,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub vary: Vary,
    /// Step size of the mesh that is held fixed.
    pub fixed: f64,
    /// Step sizes of the varied mesh, coarsest first, each half the previous.
    pub ladder: Vec<f64>,
    /// Reference mesh for discrete sources (2D).
    pub h_ref: f64,
    pub tol: f64,
}

/// Parses `1/8`, `2^-3`, `1/2^3`, `1e-3` and plain decimals.
pub fn parse_mesh_value(s: &str) -> Result<f64> {
    fn atom(s: &str) -> Result<f64> {
        let s = s.trim();
        if let Some((base, exp)) = s.split_once('^') {
            let b: f64 = base.trim().parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))?;
            let e: f64 = exp.trim().parse().map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))?;
            Ok(b.powf(e))
        } else {
            s.parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))
        }
    }
    let v = match s.split_once('/') {
        Some((num, den)) => atom(num)? / atom(den)?,
        None => atom(s)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse(format!("`{s}` is not a finite number")))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_mesh_value).collect()
}

impl StudySpec {
    /// Parses a `key = value` study file. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&parse_key_values(text)?)
    }

    /// Builds a spec from key/value pairs (the keys mirror the CLI flags).
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        const KEYS: [&str; 10] = [
            "dimension", "scheme", "problem", "alpha", "beta", "vary", "fixed", "ladder", "h_ref", "tol",
        ];
        if let Some(bad) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown key `{bad}`")));
        }
        let get = |k: &str| map.get(k).ok_or_else(|| Error::Parse(format!("missing key `{k}`")));
        let dimension: usize = get("dimension")?
            .parse()
            .map_err(|_| Error::Parse("dimension must be 1 or 2".into()))?;
        let problem = match map.get("problem") {
            Some(p) => p.parse()?,
            None if dimension == 2 => ProblemId::Example2,
            None => ProblemId::Example1,
        };
        let spec = Self {
            dimension,
            scheme: get("scheme")?.parse()?,
            problem,
            alphas: parse_list(get("alpha")?)?,
            betas: parse_list(get("beta")?)?,
            vary: get("vary")?.parse()?,
            fixed: parse_mesh_value(get("fixed")?)?,
            ladder: parse_list(get("ladder")?)?,
            h_ref: map.get("h_ref").map(|s| parse_mesh_value(s)).transpose()?.unwrap_or(DEFAULT_H_REF),
            tol: map.get("tol").map(|s| parse_mesh_value(s)).transpose()?.unwrap_or(CgOptions::default().tol),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 1 && self.dimension != 2 {
            return arg_err(format!("dimension must be 1 or 2, got {}", self.dimension));
        }
        let expected = if self.dimension == 1 { ProblemId::Example1 } else { ProblemId::Example2 };
        if self.problem != expected {
            return arg_err(format!("problem {:?} is not available in {}D", self.problem, self.dimension));
        }
        if self.alphas.is_empty() || self.betas.is_empty() || self.ladder.is_empty() {
            return arg_err("alpha, beta and ladder lists must be nonempty");
        }
        for w in self.ladder.windows(2) {
            if (w[0] / w[1] - 2.0).abs() > 1e-9 {
                return arg_err(format!("ladder must halve at every rung, got {} then {}", w[0], w[1]));
            }
        }
        if !(self.fixed > 0.0) || self.ladder.iter().any(|&v| !(v > 0.0)) {
            return arg_err("mesh values must be positive");
        }
        if !(self.tol > 0.0) {
            return arg_err("tol must be positive");
        }
        Ok(())
    }
}

/// Reads `key = value` lines; `#` starts a comment and keys are case-insensitive.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse(format!("line {}: expected key = value", lineno + 1)));
        };
        map.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    Ok(map)
}

/// Number of intervals of length `step` in `width`.
fn intervals(width: f64, step: f64) -> Result<usize> {
    let n = width / step;
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-9 * n {
        return arg_err(format!("step {step} does not divide the interval length {width}"));
    }
    Ok(r as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub mesh: f64,
    pub error: f64,
    /// `log2(E_coarse / E_fine)`, attached to the finer row.
    pub order: Option<f64>,
}

/// One `(α, β)` cell of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBlock {
    pub scheme: Scheme,
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<ReportRow>,
    pub seconds: f64,
    pub max_cg_iterations: usize,
    pub max_cg_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub vary: Vary,
    pub blocks: Vec<ReportBlock>,
}

fn rows_from(ladder: &[f64], errors: &[f64]) -> Vec<ReportRow> {
    ladder
        .iter()
        .zip(errors)
        .enumerate()
        .map(|(i, (&mesh, &error))| ReportRow {
            mesh,
            error,
            order: (i > 0).then(|| (errors[i - 1] / error).log2()),
        })
        .collect()
}

fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every `(α, β)` cell of the study; cells run concurrently.
pub fn run_convergence(spec: &StudySpec) -> Result<ConvergenceReport> {
    spec.validate()?;
    let cells: Vec<(f64, f64)> = spec
        .alphas
        .iter()
        .flat_map(|&a| spec.betas.iter().map(move |&b| (a, b)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    let blocks = pool.install(|| {
        cells
            .par_iter()
            .map(|&(alpha, beta)| {
                run_cell(spec, alpha, beta).map_err(|e| Error::Cell {
                    alpha,
                    beta,
                    mesh: spec.fixed,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ConvergenceReport { vary: spec.vary, blocks })
}

fn run_cell(spec: &StudySpec, alpha: f64, beta: f64) -> Result<ReportBlock> {
    let start = Instant::now();
    let opts = SolveOptions {
        cg: CgOptions {
            tol: spec.tol,
            ..CgOptions::default()
        },
        ..SolveOptions::default()
    };
    let mut iters = 0;
    let mut resid: f64 = 0.0;
    let errors = if spec.dimension == 1 {
        let p = example1_problem(alpha, beta)?;
        let width = p.b - p.a;
        let span = p.t_end - p.a_tilde;
        spec.ladder
            .iter()
            .map(|&v| {
                let (m, n) = match spec.vary {
                    Vary::Space => (intervals(width, v)?, intervals(span, spec.fixed)?),
                    Vary::Time => (intervals(width, spec.fixed)?, intervals(span, v)?),
                };
                let traj = solve_1d(spec.scheme, &p, m, n, &opts)?;
                iters = iters.max(traj.max_iterations());
                resid = traj.diagnostics.iter().fold(resid, |r, d| r.max(d.residual));
                final_error_1d(&p, &traj)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let p = example2_problem(alpha, beta, spec.h_ref)?;
        let width = 2.0 * p.l;
        let span = p.t_end - p.a_tilde;
        let mut meshes = vec![2.0 * spec.ladder[0]];
        meshes.extend_from_slice(&spec.ladder);
        let trajs: Vec<Trajectory2D> = meshes
            .iter()
            .map(|&v| {
                let (m, n) = match spec.vary {
                    Vary::Space => (intervals(width, v)?, intervals(span, spec.fixed)?),
                    Vary::Time => (intervals(width, spec.fixed)?, intervals(span, v)?),
                };
                let traj = solve_2d(spec.scheme, &p, m, n, &opts)?;
                iters = iters.max(traj.max_iterations());
                resid = traj.diagnostics.iter().fold(resid, |r, d| r.max(d.residual));
                Ok(traj)
            })
            .collect::<Result<Vec<_>>>()?;
        trajs
            .windows(2)
            .map(|w| match spec.vary {
                Vary::Space => error_e_h(&w[0], &w[1]),
                Vary::Time => error_f_tau(&w[0], &w[1]),
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(ReportBlock {
        scheme: spec.scheme,
        alpha,
        beta,
        rows: rows_from(&spec.ladder, &errors),
        seconds: start.elapsed().as_secs_f64(),
        max_cg_iterations: iters,
        max_cg_residual: resid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Parse(format!("unknown report format `{other}`"))),
        }
    }
}

/// Renders a report. CSV keeps full precision (`mesh,error,order`, with leading
/// `alpha,beta` columns when the report has several cells); markdown shows three
/// significant digits as in published tables.
pub fn emit_report(report: &ConvergenceReport, format: ReportFormat) -> Result<String> {
    if report.blocks.is_empty() || report.blocks.iter().any(|b| b.rows.is_empty()) {
        return arg_err("cannot emit an empty report");
    }
    let mut out = String::new();
    let multi = report.blocks.len() > 1;
    match format {
        ReportFormat::Csv => {
            out.push_str(if multi { "alpha,beta,mesh,error,order\n" } else { "mesh,error,order\n" });
            for b in &report.blocks {
                for r in &b.rows {
                    if multi {
                        write!(out, "{:e},{:e},", b.alpha, b.beta).unwrap();
                    }
                    let order = r.order.map(|o| format!("{o:e}")).unwrap_or_default();
                    writeln!(out, "{:e},{:e},{order}", r.mesh, r.error).unwrap();
                }
            }
        }
        ReportFormat::Markdown => {
            let label = match report.vary {
                Vary::Space => "h",
                Vary::Time => "τ",
            };
            for (i, b) in report.blocks.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                writeln!(out, "{} α = {}, β = {}\n", b.scheme, b.alpha, b.beta).unwrap();
                writeln!(out, "| {label} | error | order |\n|---|---|---|").unwrap();
                for r in &b.rows {
                    let order = r.order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "-".into());
                    writeln!(out, "| {} | {:.2e} | {order} |", mesh_label(r.mesh), r.error).unwrap();
                }
            }
        }
    }
    Ok(out)
}

// 1/2^k for powers of two, else the plain value
fn mesh_label(v: f64) -> String {
    let k = -v.log2();
    if k > 0.0 && (k - k.round()).abs() < 1e-12 {
        format!("1/2^{}", k.round() as i64)
    } else {
        format!("{v}")
    }
}

/// Parses CSV produced by [`emit_report`] back into rows, grouped by `(α, β)`.
/// Timing and solver statistics are not part of the CSV and come back as zero.
pub fn parse_report_csv(text: &str, scheme: Scheme, vary: Vary) -> Result<ConvergenceReport> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let multi = match header.trim() {
        "mesh,error,order" => false,
        "alpha,beta,mesh,error,order" => true,
        other => return Err(Error::Parse(format!("unexpected header `{other}`"))),
    };
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Parse(format!("bad number `{s}`"))) };
    let mut blocks: Vec<ReportBlock> = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let (alpha, beta, rest) = if multi {
            if f.len() != 5 {
                return Err(Error::Parse(format!("expected 5 fields in `{line}`")));
            }
            (num(f[0])?, num(f[1])?, &f[2..])
        } else {
            if f.len() != 3 {
                return Err(Error::Parse(format!("expected 3 fields in `{line}`")));
            }
            (f64::NAN, f64::NAN, &f[..])
        };
        let row = ReportRow {
            mesh: num(rest[0])?,
            error: num(rest[1])?,
            order: if rest[2].is_empty() { None } else { Some(num(rest[2])?) },
        };
        let same = |b: &ReportBlock| {
            !multi || (b.alpha == alpha && b.beta == beta)
        };
        match blocks.last_mut() {
            Some(b) if same(b) && row.order.is_some() => b.rows.push(row),
            _ => blocks.push(ReportBlock {
                scheme,
                alpha,
                beta,
                rows: vec![row],
                seconds: 0.0,
                max_cg_iterations: 0,
                max_cg_residual: 0.0,
            }),
        }
    }
    if blocks.is_empty() {
        return Err(Error::Parse("CSV has no data rows".into()));
    }
    Ok(ConvergenceReport { vary, blocks })
}
