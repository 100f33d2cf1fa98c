use super::{dot, norm2, LinearOperator, Preconditioner};
use crate::error::{arg_err, Error, Result};

/// Default relative residual tolerance.
pub const DEFAULT_CG_TOL: f64 = 1e-13;

const MAX_RESTARTS: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Relative residual target `‖b - Ax‖ ≤ tol·‖b‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `10·n`.
    pub max_iter: Option<usize>,
    /// Multiplier on `ε·‖A‖·‖x‖`, the residual level below which a true residual is
    /// accepted even when `tol·‖b‖` is smaller. Zero disables the floor.
    pub floor_factor: f64,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_CG_TOL,
            max_iter: None,
            floor_factor: 64.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// True relative residual `‖b - Ax‖ / ‖b‖` of the returned solution.
    pub residual: f64,
}

/// Unpreconditioned conjugate gradients from a zero initial guess.
pub fn cg_solve(op: &dyn LinearOperator, rhs: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let opts = CgOptions {
        tol,
        max_iter: Some(max_iter),
        ..CgOptions::default()
    };
    pcg_solve(op, None, rhs, None, &opts)
}

/// Preconditioned conjugate gradients for a symmetric positive definite operator.
///
/// Iterates on the recursively updated residual, then checks the true residual and
/// restarts from the current iterate if the two have drifted apart. The returned
/// solution satisfies `‖b - Ax‖ ≤ max(tol·‖b‖, floor_factor·ε·‖A‖·‖x‖)`, the second
/// term being what an FFT-based matvec can resolve at all.
pub fn pcg_solve(
    op: &dyn LinearOperator,
    precond: Option<&dyn Preconditioner>,
    rhs: &[f64],
    x0: Option<&[f64]>,
    opts: &CgOptions,
) -> Result<CgOutcome> {
    let n = op.dim();
    if rhs.len() != n {
        return arg_err(format!("right-hand side has length {}, operator dimension {n}", rhs.len()));
    }
    if !(opts.tol > 0.0) {
        return arg_err(format!("CG tolerance must be positive, got {}", opts.tol));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let b_norm = norm2(rhs);
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => return arg_err(format!("initial guess has length {}, expected {n}", x0.len())),
        None => vec![0.0; n],
    };
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let floor_scale = opts.floor_factor * f64::EPSILON * op.norm_bound().unwrap_or(0.0);
    let target = |x: &[f64]| (opts.tol * b_norm).max(floor_scale * norm2(x));

    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut iterations = 0;

    let true_residual = |x: &[f64], r: &mut [f64], q: &mut [f64]| {
        op.apply(x, q);
        for i in 0..n {
            r[i] = rhs[i] - q[i];
        }
        norm2(r)
    };

    let mut r_norm = true_residual(&x, &mut r, &mut q);
    for _ in 0..=MAX_RESTARTS {
        if r_norm <= target(&x) {
            return Ok(CgOutcome {
                solution: x,
                iterations,
                residual: r_norm / b_norm,
            });
        }
        // iterate until the recursive residual meets the tolerance, which usually
        // leaves the true residual at the attainable level
        let goal = opts.tol * b_norm;
        precondition(precond, &r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            op.apply(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                return arg_err("operator is not positive definite along a search direction");
            }
            let step = rz / pq;
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * q[i];
            }
            let rec = norm2(&r);
            // past a tenth of the floor further iterations cannot improve the true residual
            if rec <= goal || rec <= 0.1 * floor_scale * norm2(&x) {
                break;
            }
            precondition(precond, &r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        r_norm = true_residual(&x, &mut r, &mut q);
        if iterations >= max_iter && r_norm > target(&x) {
            break;
        }
    }
    if r_norm <= target(&x) {
        return Ok(CgOutcome {
            solution: x,
            iterations,
            residual: r_norm / b_norm,
        });
    }
    Err(Error::NotConverged {
        iterations,
        residual: r_norm / b_norm,
    })
}

fn precondition(precond: Option<&dyn Preconditioner>, r: &[f64], z: &mut [f64]) {
    match precond {
        Some(m) => m.apply_inverse(r, z),
        None => z.copy_from_slice(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseMatrix, Identity, SymmetricToeplitzOperator};

    fn laplacian_1d(n: usize, shift: f64) -> SymmetricToeplitzOperator {
        let mut col = vec![0.0; n];
        col[0] = 2.0;
        if n > 1 {
            col[1] = -1.0;
        }
        SymmetricToeplitzOperator::new(col, shift).unwrap()
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = vec![1.0, -2.0, 3.0];
        let out = cg_solve(&Identity(3), &b, 1e-13, 10).unwrap();
        assert!(out.iterations <= 1);
        assert_eq!(out.solution, b);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let out = cg_solve(&laplacian_1d(5, 0.0), &[0.0; 5], 1e-13, 10).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.solution.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tridiagonal_solution_and_residual() {
        let n = 50;
        let op = laplacian_1d(n, 0.0);
        let exact: Vec<f64> = (0..n).map(|i| (i as f64 * 0.2).sin()).collect();
        let mut b = vec![0.0; n];
        op.apply(&exact, &mut b);
        let out = cg_solve(&op, &b, 1e-13, 10 * n).unwrap();
        assert!(out.residual <= 1e-13);
        for (a, e) in out.solution.iter().zip(&exact) {
            assert!((a - e).abs() < 1e-10);
        }
        // CG terminates in at most n steps in exact arithmetic
        assert!(out.iterations <= n + 5, "{}", out.iterations);
    }

    #[test]
    fn strang_preconditioning_cuts_iterations() {
        let n = 400;
        let op = laplacian_1d(n, 1e-3);
        let b: Vec<f64> = (0..n).map(|i| ((i * i) as f64 * 0.01).cos()).collect();
        let plain = cg_solve(&op, &b, 1e-12, 10 * n).unwrap();
        let pre = op.strang_preconditioner().unwrap();
        let opts = CgOptions {
            tol: 1e-12,
            ..CgOptions::default()
        };
        let fast = pcg_solve(&op, Some(&pre), &b, None, &opts).unwrap();
        assert!(fast.iterations * 4 < plain.iterations, "{} vs {}", fast.iterations, plain.iterations);
        for (a, c) in fast.solution.iter().zip(&plain.solution) {
            assert!((a - c).abs() < 1e-8 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn warm_start_at_solution_needs_no_iterations() {
        let op = laplacian_1d(20, 0.5);
        let b = vec![1.0; 20];
        let first = cg_solve(&op, &b, 1e-13, 200).unwrap();
        let opts = CgOptions::default();
        let again = pcg_solve(&op, None, &b, Some(&first.solution), &opts).unwrap();
        assert!(again.iterations <= 1);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let op = laplacian_1d(200, 0.0);
        let b = vec![1.0; 200];
        match cg_solve(&op, &b, 1e-13, 3) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-13);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn indefinite_operator_is_rejected() {
        let m = DenseMatrix::from_fn(2, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(cg_solve(&m, &[1.0, 1.0], 1e-13, 10).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(cg_solve(&Identity(3), &[1.0], 1e-13, 10).is_err());
    }
}
