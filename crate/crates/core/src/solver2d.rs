//! Implicit solvers for `CH D^α_t u = -(-Δ)^{β/2} u + f` on `(-L, L)²`, with `u = 0`
//! outside the square.
//!
//! Fields are stored as interior values only, `(M-1)²` entries in row-major order with
//! the first index along `x`.

use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{arg_err, Result};
use crate::linalg::{BttbOperator, BttbSpectrum, DenseMatrix, StrangBttbPreconditioner};
use crate::spatial::{default_oversample, fcd_coeffs_2d, frac_laplacian_apply_2d, SpatialGrid2D};
use crate::stepping::{self, StepSpace};
use crate::temporal::{ch_derivative_logpower, Scheme, TemporalGrid};

pub use crate::stepping::{SolveOptions, StepDiagnostics};

pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Fn3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Default reference mesh width for discrete sources.
pub const DEFAULT_H_REF: f64 = 1.0 / 256.0;

/// Exact solution of the separable form `(log(t/ã))^p · P(x, y)`, with `P` zero
/// outside the domain. Its source is evaluated as the closed-form Caputo-Hadamard
/// derivative of the time factor plus the discrete fractional Laplacian of `P` on a
/// reference mesh `h_ref`.
#[derive(Clone)]
pub struct DiscreteSource {
    pub power: f64,
    pub profile: Fn2,
    pub h_ref: f64,
    // h_ref^{-β} A P on the reference mesh, keyed by (β, L)
    fine: Arc<Mutex<Option<Arc<FineTerm>>>>,
}

struct FineTerm {
    beta: f64,
    l: f64,
    m_ref: usize,
    values: Vec<f64>,
}

impl DiscreteSource {
    pub fn new(power: f64, profile: Fn2, h_ref: f64) -> Self {
        Self {
            power,
            profile,
            h_ref,
            fine: Arc::new(Mutex::new(None)),
        }
    }

    fn reference_mesh(&self, l: f64) -> Result<usize> {
        let m = 2.0 * l / self.h_ref;
        let m_ref = m.round() as usize;
        if !(self.h_ref > 0.0) || m_ref < 2 || (m - m_ref as f64).abs() > 1e-9 * m {
            return arg_err(format!("h_ref = {} does not divide the domain width {}", self.h_ref, 2.0 * l));
        }
        Ok(m_ref)
    }

    fn compute_fine(&self, beta: f64, l: f64) -> Result<FineTerm> {
        let m_ref = self.reference_mesh(l)?;
        let grid = SpatialGrid2D::new(l, m_ref)?;
        let stencil = fcd_coeffs_2d(beta, m_ref, default_oversample(m_ref))?;
        let p = grid.sample_interior(|x, y| (self.profile)(x, y));
        let values = frac_laplacian_apply_2d(&stencil, &grid, &p)?;
        Ok(FineTerm { beta, l, m_ref, values })
    }

    /// Spatial term and profile restricted to the interior nodes of `grid`.
    fn restrict(&self, beta: f64, grid: &SpatialGrid2D) -> Result<(Vec<f64>, Vec<f64>)> {
        let ratio = grid.h() / self.h_ref;
        let stride = ratio.round() as usize;
        if stride < 1 || (ratio - stride as f64).abs() > 1e-9 * ratio {
            return arg_err(format!(
                "solver mesh h = {} is not a multiple of the reference mesh h_ref = {}",
                grid.h(),
                self.h_ref
            ));
        }
        // Held across the computation so concurrent callers wait instead of
        // duplicating it; a mismatched key is computed without replacing the cache.
        let fine = {
            let mut slot = self.fine.lock().unwrap_or_else(|e| e.into_inner());
            match slot.as_ref() {
                Some(f) if f.beta == beta && f.l == grid.l() => Arc::clone(f),
                Some(_) => Arc::new(self.compute_fine(beta, grid.l())?),
                None => Arc::clone(slot.insert(Arc::new(self.compute_fine(beta, grid.l())?))),
            }
        };
        let nf = fine.m_ref - 1;
        let n = grid.interior();
        let mut q = Vec::with_capacity(n * n);
        for i in 1..grid.m() {
            for j in 1..grid.m() {
                q.push(fine.values[(i * stride - 1) * nf + (j * stride - 1)]);
            }
        }
        let p = grid.sample_interior(|x, y| (self.profile)(x, y));
        Ok((p, q))
    }
}

/// Source term of a [`Problem2D`].
#[derive(Clone)]
pub enum Source2D {
    /// `f(x, y, t)` in closed form.
    Analytic(Fn3),
    Discrete(DiscreteSource),
}

#[derive(Clone)]
pub struct Problem2D {
    pub alpha: f64,
    pub beta: f64,
    pub a_tilde: f64,
    pub t_end: f64,
    /// Half-width of the square domain.
    pub l: f64,
    pub u0: Fn2,
    pub source: Source2D,
    pub exact: Option<Fn3>,
}

impl fmt::Debug for Problem2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let source = match &self.source {
            Source2D::Analytic(_) => "analytic".to_string(),
            Source2D::Discrete(d) => format!("discrete(h_ref = {})", d.h_ref),
        };
        f.debug_struct("Problem2D")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("a_tilde", &self.a_tilde)
            .field("t_end", &self.t_end)
            .field("l", &self.l)
            .field("source", &source)
            .finish()
    }
}

impl Problem2D {
    pub fn homogeneous(alpha: f64, beta: f64, a_tilde: f64, t_end: f64, l: f64) -> Self {
        Self {
            alpha,
            beta,
            a_tilde,
            t_end,
            l,
            u0: Arc::new(|_, _| 0.0),
            source: Source2D::Analytic(Arc::new(|_, _, _| 0.0)),
            exact: None,
        }
    }
}

/// Evaluates the discrete-source recipe at interior nodes of `grid` for each time in `times`.
pub fn compute_source_fh(
    source: &DiscreteSource,
    alpha: f64,
    beta: f64,
    a_tilde: f64,
    grid: &SpatialGrid2D,
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let (p, q) = source.restrict(beta, grid)?;
    times
        .iter()
        .map(|&t| source_at(source.power, alpha, a_tilde, t, &p, &q))
        .collect()
}

fn source_at(power: f64, alpha: f64, a_tilde: f64, t: f64, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    let dt = ch_derivative_logpower(power, alpha, a_tilde, t)?;
    let g = ((t - a_tilde) / a_tilde).ln_1p().powf(power);
    Ok(p.iter().zip(q).map(|(pv, qv)| dt * pv + g * qv).collect())
}

/// Interior levels `U^0..U^N`.
#[derive(Debug, Clone)]
pub struct Trajectory2D {
    pub scheme: Scheme,
    pub space: SpatialGrid2D,
    pub time: TemporalGrid,
    pub levels: Vec<Vec<f64>>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub warnings: Vec<String>,
}

impl Trajectory2D {
    pub fn final_level(&self) -> &[f64] {
        self.levels.last().expect("trajectory holds U^0")
    }

    /// `U^n` at node `(j, k)`, `0 <= j, k <= M`, zero on the boundary.
    pub fn value(&self, n: usize, j: usize, k: usize) -> f64 {
        let m = self.space.m();
        if j == 0 || k == 0 || j >= m || k >= m {
            0.0
        } else {
            self.levels[n][(j - 1) * (m - 1) + (k - 1)]
        }
    }

    /// `sqrt(h² Σ U²)` of level `n`.
    pub fn norm(&self, n: usize) -> f64 {
        let h = self.space.h();
        (h * h * self.levels[n].iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn max_iterations(&self) -> usize {
        self.diagnostics.iter().map(|d| d.iterations).max().unwrap_or(0)
    }
}

struct BttbSpace {
    spectrum: Arc<BttbSpectrum>,
    scale: f64,
}

impl StepSpace for BttbSpace {
    type Op = BttbOperator;
    type Pre = StrangBttbPreconditioner;

    fn dim(&self) -> usize {
        self.spectrum.n() * self.spectrum.n()
    }

    fn apply_scaled(&self, x: &[f64], y: &mut [f64]) {
        self.spectrum.multiply(x, y);
        y.iter_mut().for_each(|v| *v *= self.scale);
    }

    fn step_operator(&self, shift: f64, weight: f64) -> Result<(Self::Op, Option<Self::Pre>)> {
        let op = BttbOperator::from_spectrum(Arc::clone(&self.spectrum), shift, weight * self.scale);
        let pre = op.strang_preconditioner().ok();
        Ok((op, pre))
    }

    fn dense_operator(&self, shift: f64, weight: f64) -> DenseMatrix {
        BttbOperator::from_spectrum(Arc::clone(&self.spectrum), shift, weight * self.scale).to_dense()
    }
}

pub fn solve_l2sigma_2d(problem: &Problem2D, m: usize, n: usize) -> Result<Trajectory2D> {
    solve_2d(Scheme::L2Sigma, problem, m, n, &SolveOptions::default())
}

/// Warns when `α ≥ 0.3738`.
pub fn solve_l12_2d(problem: &Problem2D, m: usize, n: usize) -> Result<Trajectory2D> {
    solve_2d(Scheme::L12, problem, m, n, &SolveOptions::default())
}

pub fn solve_2d(
    scheme: Scheme,
    problem: &Problem2D,
    m: usize,
    n: usize,
    opts: &SolveOptions,
) -> Result<Trajectory2D> {
    let space = SpatialGrid2D::new(problem.l, m)?;
    let time = TemporalGrid::new(problem.a_tilde, problem.t_end, n, problem.alpha)?;
    let stencil = fcd_coeffs_2d(problem.beta, m, default_oversample(m))?;
    let ops = BttbSpace {
        spectrum: stencil.spectrum()?,
        scale: space.h().powf(-problem.beta),
    };
    let u0 = space.sample_interior(|x, y| (problem.u0)(x, y));
    let out = match &problem.source {
        Source2D::Analytic(f) => {
            let f = Arc::clone(f);
            stepping::run(scheme, &time, &ops, u0, |t| Ok(space.sample_interior(|x, y| f(x, y, t))), opts)?
        }
        Source2D::Discrete(src) => {
            let (p, q) = src.restrict(problem.beta, &space)?;
            let (power, alpha, a_tilde) = (src.power, problem.alpha, problem.a_tilde);
            stepping::run(scheme, &time, &ops, u0, |t| source_at(power, alpha, a_tilde, t, &p, &q), opts)?
        }
    };
    Ok(Trajectory2D {
        scheme,
        space,
        time,
        levels: out.levels,
        diagnostics: out.diagnostics,
        warnings: out.warnings,
    })
}

/// `E(h) = sqrt(h² Σ_{j,k=0}^{M} |U_{jk}(h) - U_{2j,2k}(h/2)|²)` at the final time.
pub fn error_e_h(coarse: &Trajectory2D, fine: &Trajectory2D) -> Result<f64> {
    let (mc, mf) = (coarse.space.m(), fine.space.m());
    if mf != 2 * mc || coarse.space.l() != fine.space.l() {
        return arg_err(format!("fine mesh (M = {mf}) must halve the coarse mesh (M = {mc})"));
    }
    if (coarse.time.t_end() - fine.time.t_end()).abs() > 1e-12 * coarse.time.t_end() {
        return arg_err("trajectories end at different times");
    }
    let (nc, nf) = (coarse.levels.len() - 1, fine.levels.len() - 1);
    let mut s = 0.0;
    for j in 0..=mc {
        for k in 0..=mc {
            let d = coarse.value(nc, j, k) - fine.value(nf, 2 * j, 2 * k);
            s += d * d;
        }
    }
    let h = coarse.space.h();
    Ok((h * h * s).sqrt())
}

/// `F(τ) = sqrt(h² Σ |U^N_{jk}(τ) - U^{2N}_{jk}(τ/2)|²)`.
pub fn error_f_tau(coarse: &Trajectory2D, fine: &Trajectory2D) -> Result<f64> {
    if coarse.space != fine.space {
        return arg_err("F(tau) needs both trajectories on the same spatial mesh");
    }
    if (coarse.time.t_end() - fine.time.t_end()).abs() > 1e-12 * coarse.time.t_end() {
        return arg_err("trajectories end at different times");
    }
    let s: f64 = coarse
        .final_level()
        .iter()
        .zip(fine.final_level())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let h = coarse.space.h();
    Ok((h * h * s).sqrt())
}
