//! Linear algebra for the implicit time steps.
//!
//! Every step of the 1D and 2D schemes solves `(s·I + c·A) u = rhs` with `A` a
//! symmetric positive definite Toeplitz (1D) or block-Toeplitz-with-Toeplitz-blocks
//! (2D) matrix. The matrices are never formed: matvecs go through a zero-padded
//! circulant embedding and FFTs, and the systems are solved by conjugate gradients
//! preconditioned with the Strang circulant approximation of the same operator.
//! A dense LU solve is kept as an oracle and small-size fallback.

mod cg;
mod dense;
mod fft;
mod toeplitz;

pub use cg::{cg_solve, pcg_solve, CgOptions, CgOutcome, DEFAULT_CG_TOL};
pub use dense::{dense_solve, dense_solve_capped, DenseMatrix, DEFAULT_DENSE_CAP};
pub use fft::{fft, Fft1d, Fft2d};
pub use toeplitz::{
    BttbOperator, BttbSpectrum, StrangBttbPreconditioner, StrangToeplitzPreconditioner,
    SymmetricToeplitzOperator, ToeplitzSpectrum,
};

/// A real linear map `x -> y` of fixed dimension.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// An upper bound on the operator 2-norm, when cheaply known. Used to bound
    /// the residual level reachable in floating point.
    fn norm_bound(&self) -> Option<f64> {
        None
    }
}

/// Approximate inverse used to precondition conjugate gradients.
pub trait Preconditioner: Sync {
    fn apply_inverse(&self, r: &[f64], z: &mut [f64]);
}

/// The identity map on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }

    fn norm_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
