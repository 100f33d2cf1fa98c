//! Spatial stencils.
//!
//! In 1D the Riesz derivative of order `β ∈ (1,2)` on `[a,b]` is approximated by the
//! weighted and shifted Grünwald-Letnikov formula with shifts `(1, 0)`:
//! `-∂^β u(x_j) ≈ h^{-β} Σ_k r_{j-k} u(x_k)`. In 2D the fractional Laplacian
//! `(-Δ)^{β/2}` on `(-L,L)²` uses the fractional centered difference whose weights
//! `a_{j,k}` are the Fourier coefficients of `[4sin²(η₁/2) + 4sin²(η₂/2)]^{β/2}`.
//! Both act on fields extended by zero outside the domain.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{arg_err, Result};
use crate::linalg::{BttbSpectrum, Fft2d, ToeplitzSpectrum};
use crate::special::gamma;

fn check_beta(beta: f64) -> Result<()> {
    if beta > 1.0 && beta < 2.0 {
        Ok(())
    } else {
        arg_err(format!("beta must lie in (1, 2), got {beta}"))
    }
}

/// Uniform grid `x_j = a + jh`, `j = 0..=M`, on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid1D {
    a: f64,
    b: f64,
    m: usize,
    h: f64,
}

impl SpatialGrid1D {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return arg_err(format!("need finite a < b, got [{a}, {b}]"));
        }
        if m < 2 {
            return arg_err(format!("need M >= 2 intervals, got {m}"));
        }
        Ok(Self {
            a,
            b,
            m,
            h: (b - a) / m as f64,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.m {
            self.b
        } else {
            self.a + j as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|j| self.x(j)).collect()
    }
}

/// Grünwald-Letnikov weights `g_0..=g_n` of order `β`.
pub fn gl_weights(beta: f64, n: usize) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let mut g = Vec::with_capacity(n + 1);
    g.push(1.0);
    for k in 1..=n {
        let prev = g[k - 1];
        g.push((1.0 - (beta + 1.0) / k as f64) * prev);
    }
    Ok(g)
}

/// Coefficients `r_0..=r_M` of the shifted Grünwald-Letnikov Riesz stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszStencil {
    beta: f64,
    m: usize,
    r: Vec<f64>,
    psi: f64,
}

/// Builds the stencil for `M` intervals.
pub fn riesz_stencil(beta: f64, m: usize) -> Result<RieszStencil> {
    if m < 2 {
        return arg_err(format!("need M >= 2 intervals, got {m}"));
    }
    let g = gl_weights(beta, m + 1)?;
    let psi = 1.0 / (2.0 * (PI * beta / 2.0).cos());
    let (wb, wc) = (beta / 2.0, (2.0 - beta) / 2.0);
    let mut r = Vec::with_capacity(m + 1);
    r.push(2.0 * psi * (wb * g[1] + wc * g[0]));
    r.push(psi * (wb * g[0] + wc * g[1] + wb * g[2]));
    for k in 2..=m {
        r.push(psi * (wb * g[k + 1] + wc * g[k]));
    }
    Ok(RieszStencil { beta, m, r, psi })
}

impl RieszStencil {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `r_0..=r_M`; `r_{-k} = r_k`.
    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// `Ψ_β = 1 / (2 cos(πβ/2))`, negative on `(1,2)`.
    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Constant `c*` of the lower bound `Σ_{|k|<m} r_k > c*/m^β`.
    pub fn c_star(&self) -> f64 {
        let b = self.beta;
        (1.0 - b) * (2.0 - b) * (3.0 - b) * 4f64.powf(b) * (-2.25f64).exp() * self.psi / 3.0
    }

    /// `Σ_{k=1-m}^{m-1} r_k` for `1 <= m <= M+1`.
    pub fn partial_sum(&self, m: usize) -> f64 {
        assert!(m >= 1 && m <= self.m + 1, "partial sum index {m} out of range");
        self.r[0] + 2.0 * self.r[1..m].iter().sum::<f64>()
    }

    /// Spectrum of the `(M-1) x (M-1)` interior Toeplitz matrix `R = (r_{|i-j|})`.
    pub fn interior_spectrum(&self) -> Result<Arc<ToeplitzSpectrum>> {
        Ok(Arc::new(ToeplitzSpectrum::new(self.r[..self.m - 1].to_vec())?))
    }
}

fn check_riesz_args(stencil: &RieszStencil, grid: &SpatialGrid1D, v: &[f64]) -> Result<()> {
    if stencil.m != grid.m {
        return arg_err(format!("stencil built for M = {}, grid has M = {}", stencil.m, grid.m));
    }
    if v.len() != grid.m + 1 {
        return arg_err(format!("field has {} values, grid has {} nodes", v.len(), grid.m + 1));
    }
    Ok(())
}

/// `w_j = h^{-β} Σ_{k=0}^{M} r_{j-k} v_k` for `j = 1..M-1`, via FFT.
pub fn riesz_apply(stencil: &RieszStencil, grid: &SpatialGrid1D, v: &[f64]) -> Result<Vec<f64>> {
    check_riesz_args(stencil, grid, v)?;
    let m = grid.m;
    let spectrum = stencil.interior_spectrum()?;
    let mut w = vec![0.0; m - 1];
    spectrum.multiply(&v[1..m], &mut w);
    let scale = grid.h.powf(-stencil.beta);
    let r = &stencil.r;
    for (i, wi) in w.iter_mut().enumerate() {
        let j = i + 1;
        *wi = scale * (*wi + r[j] * v[0] + r[m - j] * v[m]);
    }
    Ok(w)
}

/// O(M²) reference for [`riesz_apply`].
pub fn riesz_apply_direct(stencil: &RieszStencil, grid: &SpatialGrid1D, v: &[f64]) -> Result<Vec<f64>> {
    check_riesz_args(stencil, grid, v)?;
    let scale = grid.h.powf(-stencil.beta);
    Ok((1..grid.m)
        .map(|j| scale * (0..=grid.m).map(|k| stencil.r[j.abs_diff(k)] * v[k]).sum::<f64>())
        .collect())
}

/// Uniform grid on `[-L, L]²` with `M` intervals per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid2D {
    l: f64,
    m: usize,
    h: f64,
}

impl SpatialGrid2D {
    pub fn new(l: f64, m: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return arg_err(format!("half-width L must be positive, got {l}"));
        }
        if m < 2 {
            return arg_err(format!("need M >= 2 intervals, got {m}"));
        }
        Ok(Self {
            l,
            m,
            h: 2.0 * l / m as f64,
        })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coordinate of node `j` along either axis.
    pub fn x(&self, j: usize) -> f64 {
        if j == self.m {
            self.l
        } else {
            -self.l + j as f64 * self.h
        }
    }

    /// Interior points per axis, `M - 1`.
    pub fn interior(&self) -> usize {
        self.m - 1
    }

    /// Samples `f` at interior nodes, row-major with the first index along x.
    pub fn sample_interior(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let n = self.interior();
        let mut out = Vec::with_capacity(n * n);
        for i in 1..self.m {
            for j in 1..self.m {
                out.push(f(self.x(i), self.x(j)));
            }
        }
        out
    }
}

/// Weights `a_{j,k}`, `0 <= j,k <= M-2`, of the 2D fractional centered difference.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianStencil2D {
    beta: f64,
    m: usize,
    oversample: usize,
    table: Vec<f64>,
}

/// Smallest admissible sampling size for `M` intervals.
pub fn default_oversample(m: usize) -> usize {
    (4 * m).max(512).next_power_of_two()
}

/// Computes `a_{j,k}` from a `K x K` sampling of the symbol.
pub fn fcd_coeffs_2d(beta: f64, m: usize, oversample: usize) -> Result<LaplacianStencil2D> {
    check_beta(beta)?;
    if m < 2 {
        return arg_err(format!("need M >= 2 intervals, got {m}"));
    }
    if !oversample.is_power_of_two() || oversample < (4 * m).max(512) {
        return arg_err(format!(
            "oversample K must be a power of two with K >= max(512, 4M) = {}, got {oversample}",
            (4 * m).max(512)
        ));
    }
    Ok(LaplacianStencil2D {
        beta,
        m,
        oversample,
        table: fcd_table(beta, m - 1, oversample),
    })
}

/// Symbol of the centered difference at frequency `(η₁, η₂)`.
pub fn fcd_symbol(beta: f64, eta1: f64, eta2: f64) -> f64 {
    let s1 = (eta1 / 2.0).sin();
    let s2 = (eta2 / 2.0).sin();
    (4.0 * (s1 * s1 + s2 * s2)).powf(beta / 2.0)
}

// n x n table of a_{j,k}, 0 <= j,k < n, with no range checks on beta
pub(crate) fn fcd_table(beta: f64, n: usize, k: usize) -> Vec<f64> {
    // sampling [0, 2π)² is the same point set as [-π, π)² modulo periodicity
    let sin2: Vec<f64> = (0..k)
        .map(|p| {
            let s = (PI * p as f64 / k as f64).sin();
            4.0 * s * s
        })
        .collect();
    let mut buf: Vec<Complex64> = Vec::with_capacity(k * k);
    for p in 0..k {
        for q in 0..k {
            buf.push(Complex64::new((sin2[p] + sin2[q]).powf(beta / 2.0), 0.0));
        }
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); k * k];
    Fft2d::new(k).forward(&mut buf, &mut scratch);
    drop(scratch);
    let norm = 1.0 / (k * k) as f64;
    let at = |j: usize, l: usize| buf[(j % k) * k + (l % k)].re;
    let tail = AliasTail::new(beta, k);
    let mut table = vec![0.0; n * n];
    for j in 0..n {
        for l in j..n {
            let (jm, lm) = (k - j, k - l);
            let sum = at(j, l) + at(l, j) + at(jm, l) + at(j, lm) + at(jm, lm) + at(l, jm) + at(lm, j) + at(lm, jm);
            let v = sum * norm / 8.0 - tail.images(j as f64, l as f64);
            table[j * n + l] = v;
            table[l * n + j] = v;
        }
    }
    table
}

/// Far-field behaviour `a_{j,k} ≈ -C_β |(j,k)|^{-2-β}` of the coefficients, with
/// `C_β = 2^β Γ(1+β/2) / (π |Γ(-β/2)|)` the kernel constant of `(-Δ)^{β/2}` in 2D.
/// A K-point DFT returns `Σ_{m,n} a_{j+mK, k+nK}`; subtracting the far-field images
/// removes the aliasing error to relative order `K^{-2}`.
struct AliasTail {
    exponent: f64,
    c: f64,
    k: f64,
    tail: f64,
}

const ALIAS_RING: i64 = 3;

impl AliasTail {
    fn new(beta: f64, k: usize) -> Self {
        let c = 2f64.powf(beta) * gamma(1.0 + beta / 2.0) / (PI * gamma(-beta / 2.0).abs());
        let k = k as f64;
        // images outside the (2P+1)² block of cells (density 1/K²), as an integral over the
        // exterior of the equal-area disc
        let radius = (2 * ALIAS_RING + 1) as f64 * k / PI.sqrt();
        let tail = 2.0 * PI * radius.powf(-beta) / (beta * k * k);
        Self {
            exponent: -(2.0 + beta) / 2.0,
            c,
            k,
            tail,
        }
    }

    fn images(&self, j: f64, l: f64) -> f64 {
        let mut s = self.tail;
        for m in -ALIAS_RING..=ALIAS_RING {
            for n in -ALIAS_RING..=ALIAS_RING {
                if m == 0 && n == 0 {
                    continue;
                }
                let x = j + m as f64 * self.k;
                let y = l + n as f64 * self.k;
                s += (x * x + y * y).powf(self.exponent);
            }
        }
        -self.c * s
    }
}

impl LaplacianStencil2D {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    /// Row-major `(M-1) x (M-1)` table; entry `j*(M-1) + k` is `a_{j,k}`.
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// `a_{j,k}` for `|j|, |k| <= M-2`.
    pub fn a(&self, j: i64, k: i64) -> f64 {
        let n = self.m - 1;
        let (j, k) = (j.unsigned_abs() as usize, k.unsigned_abs() as usize);
        assert!(j < n && k < n, "a_({j},{k}) outside the stored band");
        self.table[j * n + k]
    }

    /// Restriction to `M' <= M` intervals (the leading `(M'-1)²` block).
    pub fn truncate(&self, m: usize) -> Result<LaplacianStencil2D> {
        if m < 2 || m > self.m {
            return arg_err(format!("cannot truncate stencil for M = {} to M = {m}", self.m));
        }
        let (n_old, n) = (self.m - 1, m - 1);
        let mut table = Vec::with_capacity(n * n);
        for j in 0..n {
            table.extend_from_slice(&self.table[j * n_old..j * n_old + n]);
        }
        Ok(LaplacianStencil2D {
            beta: self.beta,
            m,
            oversample: self.oversample,
            table,
        })
    }

    pub fn spectrum(&self) -> Result<Arc<BttbSpectrum>> {
        Ok(Arc::new(BttbSpectrum::new(self.m - 1, self.table.clone())?))
    }
}

fn check_2d_args(stencil: &LaplacianStencil2D, grid: &SpatialGrid2D, v: &[f64]) -> Result<()> {
    if stencil.m != grid.m {
        return arg_err(format!("stencil built for M = {}, grid has M = {}", stencil.m, grid.m));
    }
    let n = grid.interior();
    if v.len() != n * n {
        return arg_err(format!("field has {} values, expected {}", v.len(), n * n));
    }
    Ok(())
}

/// `h^{-β} A v` for an interior field `v`, via 2D FFT.
pub fn frac_laplacian_apply_2d(
    stencil: &LaplacianStencil2D,
    grid: &SpatialGrid2D,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_2d_args(stencil, grid, v)?;
    let spectrum = stencil.spectrum()?;
    let mut w = vec![0.0; v.len()];
    spectrum.multiply(v, &mut w);
    let scale = grid.h.powf(-stencil.beta);
    w.iter_mut().for_each(|x| *x *= scale);
    Ok(w)
}

/// Direct-summation reference for [`frac_laplacian_apply_2d`].
pub fn frac_laplacian_apply_2d_direct(
    stencil: &LaplacianStencil2D,
    grid: &SpatialGrid2D,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_2d_args(stencil, grid, v)?;
    let spectrum = BttbSpectrum::new(grid.interior(), stencil.table.clone())?;
    let mut w = vec![0.0; v.len()];
    spectrum.multiply_direct(v, &mut w);
    let scale = grid.h.powf(-stencil.beta);
    w.iter_mut().for_each(|x| *x *= scale);
    Ok(w)
}
