//! Implicit solvers for `CH D^α_t u = ∂^β_x u + f` on `[a, b]` with `u(a,t) = u(b,t) = 0`,
//! where `∂^β_x` is the Riesz derivative.

use std::fmt;
use std::sync::Arc;

use crate::error::{arg_err, Result};
use crate::linalg::{
    DenseMatrix, StrangToeplitzPreconditioner, SymmetricToeplitzOperator, ToeplitzSpectrum,
};
use crate::spatial::{riesz_stencil, SpatialGrid1D};
use crate::stepping::{self, StepSpace};
use crate::temporal::{Scheme, TemporalGrid};

pub use crate::stepping::{SolveOptions, StepDiagnostics, L12_STABILITY_LIMIT};

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Problem data. `f` and `exact` take `(x, t)`.
#[derive(Clone)]
pub struct Problem1D {
    pub alpha: f64,
    pub beta: f64,
    pub a_tilde: f64,
    pub t_end: f64,
    pub a: f64,
    pub b: f64,
    pub u0: Fn1,
    pub f: Fn2,
    pub exact: Option<Fn2>,
}

impl fmt::Debug for Problem1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem1D")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("a_tilde", &self.a_tilde)
            .field("t_end", &self.t_end)
            .field("domain", &(self.a, self.b))
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl Problem1D {
    /// Zero initial data and source.
    pub fn homogeneous(alpha: f64, beta: f64, a_tilde: f64, t_end: f64, a: f64, b: f64) -> Self {
        Self {
            alpha,
            beta,
            a_tilde,
            t_end,
            a,
            b,
            u0: Arc::new(|_| 0.0),
            f: Arc::new(|_, _| 0.0),
            exact: None,
        }
    }

    fn grids(&self, m: usize, n: usize) -> Result<(SpatialGrid1D, TemporalGrid)> {
        let space = SpatialGrid1D::new(self.a, self.b, m)?;
        let time = TemporalGrid::new(self.a_tilde, self.t_end, n, self.alpha)?;
        if !(self.beta > 1.0 && self.beta < 2.0) {
            return arg_err(format!("beta must lie in (1, 2), got {}", self.beta));
        }
        Ok((space, time))
    }
}

/// Solution levels `U^0..U^N`, each of length `M+1` with zero boundary entries.
#[derive(Debug, Clone)]
pub struct Trajectory1D {
    pub scheme: Scheme,
    pub space: SpatialGrid1D,
    pub time: TemporalGrid,
    pub levels: Vec<Vec<f64>>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub warnings: Vec<String>,
}

impl Trajectory1D {
    pub fn final_level(&self) -> &[f64] {
        self.levels.last().expect("trajectory holds U^0")
    }

    /// Discrete norm `sqrt(h Σ U_j²)` of level `n`.
    pub fn norm(&self, n: usize) -> f64 {
        let h = self.space.h();
        (h * self.levels[n].iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn max_iterations(&self) -> usize {
        self.diagnostics.iter().map(|d| d.iterations).max().unwrap_or(0)
    }
}

struct RieszSpace {
    dim: usize,
    spectrum: Arc<ToeplitzSpectrum>,
    scale: f64,
}

impl StepSpace for RieszSpace {
    type Op = SymmetricToeplitzOperator;
    type Pre = StrangToeplitzPreconditioner;

    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_scaled(&self, x: &[f64], y: &mut [f64]) {
        self.spectrum.multiply(x, y);
        y.iter_mut().for_each(|v| *v *= self.scale);
    }

    fn step_operator(&self, shift: f64, weight: f64) -> Result<(Self::Op, Option<Self::Pre>)> {
        let op = SymmetricToeplitzOperator::from_spectrum(Arc::clone(&self.spectrum), shift, weight * self.scale);
        let pre = op.strang_preconditioner().ok();
        Ok((op, pre))
    }

    fn dense_operator(&self, shift: f64, weight: f64) -> DenseMatrix {
        SymmetricToeplitzOperator::from_spectrum(Arc::clone(&self.spectrum), shift, weight * self.scale).to_dense()
    }
}

/// Solves with the L2-1σ scheme on `M` intervals and `N` steps.
pub fn solve_l2sigma_1d(problem: &Problem1D, m: usize, n: usize) -> Result<Trajectory1D> {
    solve_1d(Scheme::L2Sigma, problem, m, n, &SolveOptions::default())
}

/// Solves with the L1-2 scheme; warns when `α ≥ 0.3738`.
pub fn solve_l12_1d(problem: &Problem1D, m: usize, n: usize) -> Result<Trajectory1D> {
    solve_1d(Scheme::L12, problem, m, n, &SolveOptions::default())
}

pub fn solve_1d(
    scheme: Scheme,
    problem: &Problem1D,
    m: usize,
    n: usize,
    opts: &SolveOptions,
) -> Result<Trajectory1D> {
    let (space, time) = problem.grids(m, n)?;
    let stencil = riesz_stencil(problem.beta, m)?;
    let ops = RieszSpace {
        dim: m - 1,
        spectrum: stencil.interior_spectrum()?,
        scale: space.h().powf(-problem.beta),
    };
    let xs: Vec<f64> = (1..m).map(|j| space.x(j)).collect();
    let u0: Vec<f64> = xs.iter().map(|&x| (problem.u0)(x)).collect();
    let f = Arc::clone(&problem.f);
    let out = stepping::run(
        scheme,
        &time,
        &ops,
        u0,
        |t| Ok(xs.iter().map(|&x| f(x, t)).collect()),
        opts,
    )?;
    let levels = out
        .levels
        .into_iter()
        .map(|interior| {
            let mut full = Vec::with_capacity(m + 1);
            full.push(0.0);
            full.extend(interior);
            full.push(0.0);
            full
        })
        .collect();
    Ok(Trajectory1D {
        scheme,
        space,
        time,
        levels,
        diagnostics: out.diagnostics,
        warnings: out.warnings,
    })
}

/// `sqrt(h Σ_{j=1}^{M-1} |U_j - u_j|²)` for full-length fields (`M+1` entries).
pub fn error_norm_1d(u: &[f64], exact: &[f64], h: f64) -> Result<f64> {
    if u.len() != exact.len() {
        return arg_err(format!("fields have lengths {} and {}", u.len(), exact.len()));
    }
    if u.len() < 3 {
        return arg_err("fields need at least one interior node");
    }
    let m = u.len() - 1;
    let s: f64 = (1..m).map(|j| (u[j] - exact[j]).powi(2)).sum();
    Ok((h * s).sqrt())
}

/// Error of the final level against the problem's exact solution.
pub fn final_error_1d(problem: &Problem1D, traj: &Trajectory1D) -> Result<f64> {
    let Some(exact) = &problem.exact else {
        return arg_err("problem has no exact solution attached");
    };
    let t = traj.time.t_end();
    let ex: Vec<f64> = traj.space.nodes().iter().map(|&x| exact(x, t)).collect();
    error_norm_1d(traj.final_level(), &ex, traj.space.h())
}
