//! Time loop shared by the 1D and 2D solvers.
//!
//! Both schemes reduce to one linear solve per step,
//! `(c_lead I + θ h^{-β} A) U = F + c_lead U_prev - Σ_{i<last} c_i (U^i - U^{i-1}) - (1-θ) h^{-β} A U_prev`,
//! with `θ = σ` for L2-1σ and `θ = 1` for L1-2.

use crate::error::{Error, Result};
use crate::linalg::{
    dense_solve, pcg_solve, CgOptions, DenseMatrix, LinearOperator, Preconditioner, DEFAULT_DENSE_CAP,
};
use crate::temporal::{l12_row, l2sigma_row, KernelRow, Scheme, TemporalGrid};

/// Solver settings shared by all time steppers.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub cg: CgOptions,
    /// Use the Strang circulant preconditioner.
    pub precondition: bool,
    /// Fall back to a dense LU solve when CG fails and the system is small enough.
    pub dense_fallback: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cg: CgOptions::default(),
            precondition: true,
            dense_fallback: true,
        }
    }
}

/// Per-step linear solver record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub iterations: usize,
    /// True relative residual of the accepted solution.
    pub residual: f64,
    pub dense_fallback: bool,
}

/// Smallest α for which the L1-2 stability analysis no longer applies.
pub const L12_STABILITY_LIMIT: f64 = 0.3738;

pub(crate) trait StepSpace {
    type Op: LinearOperator;
    type Pre: Preconditioner;

    fn dim(&self) -> usize;

    /// `y = h^{-β} A x`.
    fn apply_scaled(&self, x: &[f64], y: &mut [f64]);

    /// `shift·I + weight·h^{-β}A` with its preconditioner.
    fn step_operator(&self, shift: f64, weight: f64) -> Result<(Self::Op, Option<Self::Pre>)>;

    fn dense_operator(&self, shift: f64, weight: f64) -> DenseMatrix;
}

pub(crate) struct RunOutput {
    pub levels: Vec<Vec<f64>>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub warnings: Vec<String>,
}

/// Runs `grid.steps()` steps from the interior values `u0`. `source(t)` returns
/// interior source values at time `t`.
pub(crate) fn run<S: StepSpace>(
    scheme: Scheme,
    grid: &TemporalGrid,
    space: &S,
    u0: Vec<f64>,
    mut source: impl FnMut(f64) -> Result<Vec<f64>>,
    opts: &SolveOptions,
) -> Result<RunOutput> {
    let n_steps = grid.steps();
    let dim = space.dim();
    let mut warnings = Vec::new();
    if scheme == Scheme::L12 && grid.alpha() >= L12_STABILITY_LIMIT {
        let msg = format!(
            "L1-2 with alpha = {} >= {L12_STABILITY_LIMIT}: outside the proven stability range",
            grid.alpha()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let theta = match scheme {
        Scheme::L2Sigma => grid.sigma(),
        Scheme::L12 => 1.0,
    };
    let mut levels = Vec::with_capacity(n_steps + 1);
    levels.push(u0);
    let mut diagnostics = Vec::with_capacity(n_steps);
    let mut rhs = vec![0.0; dim];
    let mut work = vec![0.0; dim];
    for step in 1..=n_steps {
        let row: KernelRow = match scheme {
            Scheme::L2Sigma => l2sigma_row(grid, step - 1)?,
            Scheme::L12 => l12_row(grid, step)?,
        };
        let t_eval = row.eval_time(grid);
        let f = source(t_eval).map_err(|e| step_err(step, e))?;
        let coeffs = row.coeffs();
        let lead = row.leading();
        let prev = &levels[step - 1];
        for i in 0..dim {
            rhs[i] = f[i] + lead * prev[i];
        }
        // history Σ_{i=1}^{len-1} c_i (U^i - U^{i-1})
        for (i, &c) in coeffs[..coeffs.len() - 1].iter().enumerate() {
            let (lo, hi) = (&levels[i], &levels[i + 1]);
            for j in 0..dim {
                rhs[j] -= c * (hi[j] - lo[j]);
            }
        }
        if theta < 1.0 {
            space.apply_scaled(prev, &mut work);
            for j in 0..dim {
                rhs[j] -= (1.0 - theta) * work[j];
            }
        }
        let guess: Vec<f64> = if step >= 2 {
            let older = &levels[step - 2];
            prev.iter().zip(older).map(|(a, b)| 2.0 * a - b).collect()
        } else {
            prev.clone()
        };
        let (solution, diag) = solve_step(space, lead, theta, &rhs, &guess, opts)
            .map_err(|e| step_err(step, e))?;
        diagnostics.push(StepDiagnostics { step, ..diag });
        levels.push(solution);
    }
    Ok(RunOutput {
        levels,
        diagnostics,
        warnings,
    })
}

fn step_err(step: usize, e: Error) -> Error {
    Error::Step {
        step,
        source: Box::new(e),
    }
}

fn solve_step<S: StepSpace>(
    space: &S,
    shift: f64,
    weight: f64,
    rhs: &[f64],
    guess: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, StepDiagnostics)> {
    let (op, pre) = space.step_operator(shift, weight)?;
    let pre_ref = if opts.precondition {
        pre.as_ref().map(|p| p as &dyn Preconditioner)
    } else {
        None
    };
    match pcg_solve(&op, pre_ref, rhs, Some(guess), &opts.cg) {
        Ok(out) => Ok((
            out.solution,
            StepDiagnostics {
                step: 0,
                iterations: out.iterations,
                residual: out.residual,
                dense_fallback: false,
            },
        )),
        Err(err @ Error::NotConverged { .. }) if opts.dense_fallback && space.dim() <= DEFAULT_DENSE_CAP => {
            log::warn!("{err}; retrying with dense LU");
            let dense = space.dense_operator(shift, weight);
            let x = dense_solve(&dense, rhs)?;
            let mut ax = vec![0.0; x.len()];
            op.apply(&x, &mut ax);
            let r: f64 = ax.iter().zip(rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let b: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok((
                x,
                StepDiagnostics {
                    step: 0,
                    iterations: 0,
                    residual: if b > 0.0 { r / b } else { 0.0 },
                    dense_fallback: true,
                },
            ))
        }
        Err(e) => Err(e),
    }
}
