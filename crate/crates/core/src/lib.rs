//! Solvers for ultra-slow diffusion equations, in which the time derivative is a
//! Caputo-Hadamard fractional derivative of order `alpha` in (0, 1).
//!
//! * [`temporal`]: L2-1σ and L1-2 convolution weights for the Caputo-Hadamard derivative.
//! * [`spatial`]: the 1D Riesz stencil (weighted and shifted Grünwald-Letnikov) and the
//!   2D fractional centered difference stencil for the integral fractional Laplacian.
//! * [`linalg`]: FFT, Toeplitz/BTTB operators, conjugate gradients and a dense LU fallback.
//! * [`solver1d`], [`solver2d`]: implicit time steppers.
//! * [`problems`], [`study`], [`selftest`]: benchmark problems, convergence studies and
//!   the property suite behind `ultraslow-fde selftest`.

pub mod error;
pub mod linalg;
pub mod problems;
pub mod selftest;
pub mod solver1d;
mod stepping;
pub mod solver2d;
pub mod spatial;
pub mod special;
pub mod study;
pub mod temporal;

pub use error::{Error, Result};
