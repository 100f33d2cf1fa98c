use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{arg_err, Result};

/// Discrete Fourier transform of a power-of-two length sequence.
///
/// The forward transform is unnormalized, `X_k = Σ_j x_j e^{-2πijk/n}`; the inverse
/// carries the `1/n` factor so that a round trip reproduces the input.
pub fn fft(values: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    let n = values.len();
    if n == 0 || !n.is_power_of_two() {
        return arg_err(format!("FFT length must be a power of two, got {n}"));
    }
    let plan = Fft1d::new(n);
    let mut out = values.to_vec();
    if inverse {
        plan.inverse(&mut out);
        let scale = 1.0 / n as f64;
        out.iter_mut().for_each(|v| *v *= scale);
    } else {
        plan.forward(&mut out);
    }
    Ok(out)
}

/// Cached forward/inverse plans for one transform length (any length).
#[derive(Clone)]
pub struct Fft1d {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft1d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft1d").field("len", &self.len).finish()
    }
}

impl Fft1d {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform, in place. `buf.len()` may be any multiple of `len`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// Unnormalized inverse transform, in place.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
    }
}

/// Square 2D transforms on row-major `len x len` buffers.
///
/// Column passes are done by transposing, so the spectrum produced by
/// [`Fft2d::forward_transposed`] is laid out transposed. Pointwise multipliers that are
/// symmetric in the two frequency indices (all of ours) are unaffected.
#[derive(Debug, Clone)]
pub struct Fft2d {
    plan: Fft1d,
}

impl Fft2d {
    pub fn new(len: usize) -> Self {
        Self {
            plan: Fft1d::new(len),
        }
    }

    pub fn len(&self) -> usize {
        self.plan.len
    }

    pub fn is_empty(&self) -> bool {
        self.plan.len == 0
    }

    /// Forward 2D transform. Only the first `live_rows` rows of the input may be nonzero.
    /// Output is the transposed spectrum.
    pub fn forward_transposed(&self, buf: &mut [Complex64], scratch: &mut [Complex64], live_rows: usize) {
        let n = self.plan.len;
        self.plan.forward(&mut buf[..live_rows * n]);
        transpose(buf, scratch, n);
        self.plan.forward(scratch);
        buf.copy_from_slice(scratch);
    }

    /// Inverse of [`Fft2d::forward_transposed`] (unnormalized). Only the first
    /// `live_rows` rows of the result are computed.
    pub fn inverse_from_transposed(
        &self,
        buf: &mut [Complex64],
        scratch: &mut [Complex64],
        live_rows: usize,
    ) {
        let n = self.plan.len;
        self.plan.inverse(buf);
        transpose(buf, scratch, n);
        self.plan.inverse(&mut scratch[..live_rows * n]);
        buf[..live_rows * n].copy_from_slice(&scratch[..live_rows * n]);
    }

    /// Plain (non-transposed) unnormalized forward transform.
    pub fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.plan.len;
        self.forward_transposed(buf, scratch, n);
        transpose(buf, scratch, n);
        buf.copy_from_slice(scratch);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for ib in (0..n).step_by(BLOCK) {
        for jb in (0..n).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(n) {
                for j in jb..(jb + BLOCK).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}
