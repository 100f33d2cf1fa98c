use std::sync::Arc;

use rustfft::num_complex::Complex64;

use super::dense::DenseMatrix;
use super::fft::{Fft1d, Fft2d};
use super::{LinearOperator, Preconditioner};
use crate::error::{arg_err, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn embed_len(n: usize) -> usize {
    (2 * n).next_power_of_two().max(2)
}

/// Circulant-embedding spectrum of a symmetric Toeplitz matrix `T`, shared by all
/// operators `s·I + c·T` built from it.
#[derive(Debug)]
pub struct ToeplitzSpectrum {
    first_column: Vec<f64>,
    plan: Fft1d,
    eig: Vec<f64>,
    max_abs_eig: f64,
}

impl ToeplitzSpectrum {
    pub fn new(first_column: Vec<f64>) -> Result<Self> {
        let n = first_column.len();
        if n == 0 {
            return arg_err("Toeplitz matrix must have positive dimension");
        }
        if first_column.iter().any(|v| !v.is_finite()) {
            return arg_err("Toeplitz generator has non-finite entries");
        }
        let len = embed_len(n);
        let plan = Fft1d::new(len);
        let mut buf = vec![ZERO; len];
        buf[0].re = first_column[0];
        for j in 1..n {
            buf[j].re = first_column[j];
            buf[len - j].re = first_column[j];
        }
        plan.forward(&mut buf);
        let eig: Vec<f64> = buf.iter().map(|v| v.re).collect();
        let max_abs_eig = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Self {
            first_column,
            plan,
            eig,
            max_abs_eig,
        })
    }

    pub fn dim(&self) -> usize {
        self.first_column.len()
    }

    pub fn first_column(&self) -> &[f64] {
        &self.first_column
    }

    /// `y = T x` through the circulant embedding.
    pub fn multiply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        let len = self.plan.len();
        let mut buf = vec![ZERO; len];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.plan.forward(&mut buf);
        for (b, &e) in buf.iter_mut().zip(&self.eig) {
            *b *= e;
        }
        self.plan.inverse(&mut buf);
        let inv = 1.0 / len as f64;
        for (yi, b) in y[..n].iter_mut().zip(&buf) {
            *yi = b.re * inv;
        }
    }

    /// `y = T x` by the O(n²) sum.
    pub fn multiply_direct(&self, x: &[f64], y: &mut [f64]) {
        let t = &self.first_column;
        let n = t.len();
        for i in 0..n {
            y[i] = (0..n).map(|j| t[i.abs_diff(j)] * x[j]).sum();
        }
    }

    /// Bound on `‖T‖₂`: the largest eigenvalue magnitude of the embedding circulant.
    pub fn norm_bound(&self) -> f64 {
        self.max_abs_eig
    }
}

/// `s·I + c·T` with `T` symmetric Toeplitz.
#[derive(Debug, Clone)]
pub struct SymmetricToeplitzOperator {
    spectrum: Arc<ToeplitzSpectrum>,
    shift: f64,
    scale: f64,
}

impl SymmetricToeplitzOperator {
    /// `s·I + T` where `T` has the given first column.
    pub fn new(first_column: Vec<f64>, diagonal_shift: f64) -> Result<Self> {
        Ok(Self::from_spectrum(
            Arc::new(ToeplitzSpectrum::new(first_column)?),
            diagonal_shift,
            1.0,
        ))
    }

    pub fn from_spectrum(spectrum: Arc<ToeplitzSpectrum>, diagonal_shift: f64, scale: f64) -> Self {
        Self {
            spectrum,
            shift: diagonal_shift,
            scale,
        }
    }

    /// Same Toeplitz part, new diagonal shift.
    pub fn with_shift(&self, diagonal_shift: f64) -> Self {
        Self {
            spectrum: Arc::clone(&self.spectrum),
            shift: diagonal_shift,
            scale: self.scale,
        }
    }

    pub fn spectrum(&self) -> &Arc<ToeplitzSpectrum> {
        &self.spectrum
    }

    pub fn first_column(&self) -> &[f64] {
        self.spectrum.first_column()
    }

    pub fn diagonal_shift(&self) -> f64 {
        self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply_direct(&self, x: &[f64], y: &mut [f64]) {
        self.spectrum.multiply_direct(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * xi + self.scale * *yi;
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let t = self.first_column();
        let n = t.len();
        DenseMatrix::from_fn(n, |i, j| {
            let d = if i == j { self.shift } else { 0.0 };
            d + self.scale * t[i.abs_diff(j)]
        })
    }

    /// Strang circulant preconditioner for this operator.
    pub fn strang_preconditioner(&self) -> Result<StrangToeplitzPreconditioner> {
        StrangToeplitzPreconditioner::new(self.first_column(), self.shift, self.scale)
    }
}

impl LinearOperator for SymmetricToeplitzOperator {
    fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spectrum.multiply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * xi + self.scale * *yi;
        }
    }

    fn norm_bound(&self) -> Option<f64> {
        Some(self.shift.abs() + self.scale.abs() * self.spectrum.norm_bound())
    }
}

/// Inverse of the Strang circulant `s·I + c·C`, where `C` copies the central diagonals
/// of `T` and wraps them around.
#[derive(Debug, Clone)]
pub struct StrangToeplitzPreconditioner {
    plan: Fft1d,
    inv_eig: Vec<f64>,
}

impl StrangToeplitzPreconditioner {
    pub fn new(first_column: &[f64], shift: f64, scale: f64) -> Result<Self> {
        let n = first_column.len();
        let plan = Fft1d::new(n);
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(first_column[j.min(n - j)], 0.0))
            .collect();
        plan.forward(&mut buf);
        let mut inv_eig = Vec::with_capacity(n);
        for b in &buf {
            let lam = shift + scale * b.re;
            if !(lam > 0.0) {
                return arg_err("Strang circulant is not positive definite");
            }
            inv_eig.push(1.0 / (lam * n as f64));
        }
        Ok(Self { plan, inv_eig })
    }
}

impl Preconditioner for StrangToeplitzPreconditioner {
    fn apply_inverse(&self, r: &[f64], z: &mut [f64]) {
        let mut buf: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plan.forward(&mut buf);
        for (b, &w) in buf.iter_mut().zip(&self.inv_eig) {
            *b *= w;
        }
        self.plan.inverse(&mut buf);
        for (zi, b) in z.iter_mut().zip(&buf) {
            *zi = b.re;
        }
    }
}

/// Circulant-embedding spectrum of a symmetric BTTB matrix acting on `n x n` fields
/// stored row-major. Entry `((i1,j1),(i2,j2))` is `table[|i1-i2|][|j1-j2|]`.
#[derive(Debug)]
pub struct BttbSpectrum {
    n: usize,
    table: Vec<f64>,
    plan: Fft2d,
    eig: Vec<f64>,
    max_abs_eig: f64,
}

impl BttbSpectrum {
    /// `table` is row-major `n x n` with `table[j*n + k] = a_{j,k}`.
    pub fn new(n: usize, table: Vec<f64>) -> Result<Self> {
        if n == 0 || table.len() != n * n {
            return arg_err(format!(
                "BTTB table must be n x n with n > 0, got n = {n} and {} entries",
                table.len()
            ));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return arg_err("BTTB table has non-finite entries");
        }
        let len = embed_len(n);
        let plan = Fft2d::new(len);
        let mut buf = vec![ZERO; len * len];
        for j in 0..n {
            for k in 0..n {
                let v = table[j * n + k];
                for &jj in wrap(j, len).iter().flatten() {
                    for &kk in wrap(k, len).iter().flatten() {
                        buf[jj * len + kk].re = v;
                    }
                }
            }
        }
        let mut scratch = vec![ZERO; len * len];
        plan.forward_transposed(&mut buf, &mut scratch, len);
        let eig: Vec<f64> = buf.iter().map(|v| v.re).collect();
        let max_abs_eig = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Self {
            n,
            table,
            plan,
            eig,
            max_abs_eig,
        })
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn multiply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let len = self.plan.len();
        let mut buf = vec![ZERO; len * len];
        let mut scratch = vec![ZERO; len * len];
        for i in 0..n {
            for j in 0..n {
                buf[i * len + j].re = x[i * n + j];
            }
        }
        self.plan.forward_transposed(&mut buf, &mut scratch, n);
        for (b, &e) in buf.iter_mut().zip(&self.eig) {
            *b *= e;
        }
        self.plan.inverse_from_transposed(&mut buf, &mut scratch, n);
        let inv = 1.0 / (len * len) as f64;
        for i in 0..n {
            for j in 0..n {
                y[i * n + j] = buf[i * len + j].re * inv;
            }
        }
    }

    pub fn multiply_direct(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for i1 in 0..n {
            for j1 in 0..n {
                let mut acc = 0.0;
                for i2 in 0..n {
                    let row = &self.table[i1.abs_diff(i2) * n..];
                    for j2 in 0..n {
                        acc += row[j1.abs_diff(j2)] * x[i2 * n + j2];
                    }
                }
                y[i1 * n + j1] = acc;
            }
        }
    }

    pub fn norm_bound(&self) -> f64 {
        self.max_abs_eig
    }
}

// embedding positions of lag j: j and len - j (once when they coincide)
fn wrap(j: usize, len: usize) -> [Option<usize>; 2] {
    if j == 0 {
        [Some(0), None]
    } else {
        [Some(j), Some(len - j)]
    }
}

/// `s·I + c·A` with `A` symmetric BTTB.
#[derive(Debug, Clone)]
pub struct BttbOperator {
    spectrum: Arc<BttbSpectrum>,
    shift: f64,
    scale: f64,
}

impl BttbOperator {
    pub fn new(n: usize, table: Vec<f64>, scale: f64, diagonal_shift: f64) -> Result<Self> {
        Ok(Self::from_spectrum(
            Arc::new(BttbSpectrum::new(n, table)?),
            diagonal_shift,
            scale,
        ))
    }

    pub fn from_spectrum(spectrum: Arc<BttbSpectrum>, diagonal_shift: f64, scale: f64) -> Self {
        Self {
            spectrum,
            shift: diagonal_shift,
            scale,
        }
    }

    pub fn with_shift(&self, diagonal_shift: f64) -> Self {
        Self {
            spectrum: Arc::clone(&self.spectrum),
            shift: diagonal_shift,
            scale: self.scale,
        }
    }

    pub fn spectrum(&self) -> &Arc<BttbSpectrum> {
        &self.spectrum
    }

    pub fn diagonal_shift(&self) -> f64 {
        self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply_direct(&self, x: &[f64], y: &mut [f64]) {
        self.spectrum.multiply_direct(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * xi + self.scale * *yi;
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.spectrum.n;
        let t = &self.spectrum.table;
        DenseMatrix::from_fn(n * n, |p, q| {
            let (i1, j1, i2, j2) = (p / n, p % n, q / n, q % n);
            let d = if p == q { self.shift } else { 0.0 };
            d + self.scale * t[i1.abs_diff(i2) * n + j1.abs_diff(j2)]
        })
    }

    pub fn strang_preconditioner(&self) -> Result<StrangBttbPreconditioner> {
        StrangBttbPreconditioner::new(&self.spectrum, self.shift, self.scale)
    }
}

impl LinearOperator for BttbOperator {
    fn dim(&self) -> usize {
        self.spectrum.n * self.spectrum.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spectrum.multiply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * xi + self.scale * *yi;
        }
    }

    fn norm_bound(&self) -> Option<f64> {
        Some(self.shift.abs() + self.scale.abs() * self.spectrum.norm_bound())
    }
}

/// Inverse of the two-level Strang circulant of `s·I + c·A`.
#[derive(Debug, Clone)]
pub struct StrangBttbPreconditioner {
    n: usize,
    plan: Fft2d,
    inv_eig: Vec<f64>,
}

impl StrangBttbPreconditioner {
    pub fn new(spectrum: &BttbSpectrum, shift: f64, scale: f64) -> Result<Self> {
        let n = spectrum.n;
        let plan = Fft2d::new(n);
        let t = &spectrum.table;
        let mut buf: Vec<Complex64> = (0..n * n)
            .map(|p| {
                let (j, k) = (p / n, p % n);
                Complex64::new(t[j.min(n - j) * n + k.min(n - k)], 0.0)
            })
            .collect();
        let mut scratch = vec![ZERO; n * n];
        plan.forward_transposed(&mut buf, &mut scratch, n);
        let norm = (n * n) as f64;
        let mut inv_eig = Vec::with_capacity(n * n);
        for b in &buf {
            let lam = shift + scale * b.re;
            if !(lam > 0.0) {
                return arg_err("Strang circulant is not positive definite");
            }
            inv_eig.push(1.0 / (lam * norm));
        }
        Ok(Self { n, plan, inv_eig })
    }
}

impl Preconditioner for StrangBttbPreconditioner {
    fn apply_inverse(&self, r: &[f64], z: &mut [f64]) {
        let n = self.n;
        let mut buf: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut scratch = vec![ZERO; n * n];
        self.plan.forward_transposed(&mut buf, &mut scratch, n);
        for (b, &w) in buf.iter_mut().zip(&self.inv_eig) {
            *b *= w;
        }
        self.plan.inverse_from_transposed(&mut buf, &mut scratch, n);
        for (zi, b) in z.iter_mut().zip(&buf) {
            *zi = b.re;
        }
    }
}
