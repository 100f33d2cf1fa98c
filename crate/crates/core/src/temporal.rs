//! Convolution weights for the Caputo-Hadamard derivative on a uniform grid.
//!
//! Two formulas are provided:
//!
//! * **L2-1σ** evaluates the derivative at the offset point `t_{k+σ}`, `σ = 1 - α/2`,
//!   with weights `c_{1,k} .. c_{k+1,k}`.
//! * **L1-2** evaluates it at the grid point `t_k` with weights `c_{1,k} .. c_{k,k}`,
//!   using linear interpolation on the first interval and quadratic interpolation
//!   afterwards.
//!
//! In both cases the derivative is approximated by `Σ_i c_i (φ(t_i) - φ(t_{i-1}))`,
//! see [`apply_row`]. The weights are not convolutional (they depend on `k` through the
//! logarithmic kernel), so a row is rebuilt for every step in `O(k)` work.
//!
//! All log-ratios `log(t_i / t_j)` are evaluated as `ln_1p((t_i - t_j) / t_j)` with the
//! numerator formed from integer step counts, which keeps full relative accuracy
//! when `τ ≪ ã`.

use crate::error::{arg_err, Result};
use crate::special::gamma;

/// Uniform temporal grid `t_k = ã + kτ` on `[ã, T]` together with the fractional order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalGrid {
    a_tilde: f64,
    t_end: f64,
    steps: usize,
    tau: f64,
    alpha: f64,
    sigma: f64,
}

impl TemporalGrid {
    pub fn new(a_tilde: f64, t_end: f64, steps: usize, alpha: f64) -> Result<Self> {
        if !(a_tilde > 0.0 && a_tilde.is_finite()) {
            return arg_err(format!("left endpoint must be positive, got {a_tilde}"));
        }
        if !(t_end > a_tilde && t_end.is_finite()) {
            return arg_err(format!("final time {t_end} must exceed left endpoint {a_tilde}"));
        }
        if steps == 0 {
            return arg_err("step count must be at least 1");
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return arg_err(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        Ok(Self {
            a_tilde,
            t_end,
            steps,
            tau: (t_end - a_tilde) / steps as f64,
            alpha,
            sigma: 1.0 - alpha / 2.0,
        })
    }

    pub fn a_tilde(&self) -> f64 {
        self.a_tilde
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `t_k = ã + kτ`.
    pub fn t(&self, k: usize) -> f64 {
        self.a_tilde + k as f64 * self.tau
    }

    /// `t_{k+σ} = t_k + στ`.
    pub fn t_shifted(&self, k: usize) -> f64 {
        self.t(k) + self.sigma * self.tau
    }

    /// `log(t_upper / t_lower)` where `t_upper - t_lower = (steps + frac)·τ`.
    fn log_ratio(&self, steps: usize, frac: f64, lower: usize) -> f64 {
        ((steps as f64 + frac) * self.tau / self.t(lower)).ln_1p()
    }
}

/// Which temporal formula a [`KernelRow`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    L2Sigma,
    L12,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::L2Sigma => "l2sigma",
            Scheme::L12 => "l12",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l2sigma" | "l2-1sigma" | "l21sigma" => Ok(Scheme::L2Sigma),
            "l12" | "l1-2" => Ok(Scheme::L12),
            other => arg_err(format!("unknown temporal scheme '{other}'")),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of temporal weights `c_{1,k}, c_{2,k}, ...` (stored zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    scheme: Scheme,
    step: usize,
    coeffs: Vec<f64>,
}

impl KernelRow {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// The step index `k` the row was built for.
    pub fn step(&self) -> usize {
        self.step
    }

    /// `coeffs()[i - 1] = c_{i,k}`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Weight on the newest difference (`c_{k+1,k}` or `c_{k,k}`).
    pub fn leading(&self) -> f64 {
        *self.coeffs.last().expect("rows are never empty")
    }

    /// The time at which the row approximates the derivative.
    pub fn eval_time(&self, grid: &TemporalGrid) -> f64 {
        match self.scheme {
            Scheme::L2Sigma => grid.t_shifted(self.step),
            Scheme::L12 => grid.t(self.step),
        }
    }
}

#[inline]
fn pow(x: f64, e: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (e * x.ln()).exp()
    }
}

/// L2-1σ weights `c^{(α,σ)}_{1,k} .. c^{(α,σ)}_{k+1,k}` for `0 <= k <= N-1`.
pub fn l2sigma_row(grid: &TemporalGrid, k: usize) -> Result<KernelRow> {
    if k >= grid.steps {
        return arg_err(format!("L2-1sigma step {k} out of range 0..{}", grid.steps));
    }
    let alpha = grid.alpha;
    let sigma = grid.sigma;
    let p1 = 1.0 - alpha;
    let p2 = 2.0 - alpha;
    let g = gamma(2.0 - alpha);

    // A_i = log(t_{k+σ} / t_i), i = 0..=k
    let big_a: Vec<f64> = (0..=k).map(|i| grid.log_ratio(k - i, sigma, i)).collect();
    let a1: Vec<f64> = big_a.iter().map(|&x| pow(x, p1)).collect();
    let a2: Vec<f64> = big_a.iter().map(|&x| pow(x, p2)).collect();
    // Δ_i = log(t_i / t_{i-1})
    let delta = |i: usize| grid.log_ratio(1, 0.0, i - 1);

    if k == 0 {
        return Ok(KernelRow {
            scheme: Scheme::L2Sigma,
            step: 0,
            coeffs: vec![a1[0] / (g * delta(1))],
        });
    }

    let a = |i: usize| a1[i - 1] - a1[i];
    let b: Vec<f64> = (1..=k)
        .map(|i| {
            let integral = 2.0 / p2 * (a2[i - 1] - a2[i]);
            let trapezoid = delta(i) * (a1[i] + a1[i - 1]);
            (integral - trapezoid) / grid.log_ratio(2, 0.0, i - 1)
        })
        .collect();
    let b = |i: usize| b[i - 1];

    let mut coeffs = Vec::with_capacity(k + 1);
    coeffs.push((a(1) - b(1)) / (g * delta(1)));
    for i in 2..=k {
        coeffs.push((a(i) + b(i - 1) - b(i)) / (g * delta(i)));
    }
    coeffs.push((b(k) + a1[k]) / (g * delta(k + 1)));
    Ok(KernelRow {
        scheme: Scheme::L2Sigma,
        step: k,
        coeffs,
    })
}

/// L1-2 weights `c^{(α)}_{1,k} .. c^{(α)}_{k,k}` for `1 <= k <= N`.
pub fn l12_row(grid: &TemporalGrid, k: usize) -> Result<KernelRow> {
    if k == 0 || k > grid.steps {
        return arg_err(format!("L1-2 step {k} out of range 1..={}", grid.steps));
    }
    let alpha = grid.alpha;
    let p1 = 1.0 - alpha;
    let p2 = 2.0 - alpha;
    let g = gamma(2.0 - alpha);

    // B_i = log(t_k / t_i), i = 0..=k (B_k = 0)
    let big_b: Vec<f64> = (0..=k).map(|i| grid.log_ratio(k - i, 0.0, i)).collect();
    let b1: Vec<f64> = big_b.iter().map(|&x| pow(x, p1)).collect();
    let b2: Vec<f64> = big_b.iter().map(|&x| pow(x, p2)).collect();
    let delta = |i: usize| grid.log_ratio(1, 0.0, i - 1);
    let a = |i: usize| b1[i - 1] - b1[i];

    if k == 1 {
        return Ok(KernelRow {
            scheme: Scheme::L12,
            step: 1,
            coeffs: vec![a(1) / (g * delta(1))],
        });
    }

    // b_i for i = 2..=k; index 0 and 1 unused
    let mut bq = vec![0.0; k + 1];
    for (i, slot) in bq.iter_mut().enumerate().skip(2) {
        let trapezoid = delta(i) * (b1[i] + b1[i - 1]);
        let integral = 2.0 / p2 * (b2[i] - b2[i - 1]);
        *slot = (trapezoid + integral) / grid.log_ratio(2, 0.0, i - 2);
    }

    let mut coeffs = Vec::with_capacity(k);
    coeffs.push((a(1) + bq[2]) / (g * delta(1)));
    for i in 2..k {
        coeffs.push((a(i) - bq[i] + bq[i + 1]) / (g * delta(i)));
    }
    coeffs.push((a(k) - bq[k]) / (g * delta(k)));
    Ok(KernelRow {
        scheme: Scheme::L12,
        step: k,
        coeffs,
    })
}

/// `Σ_i c_i (φ_i - φ_{i-1})` over a history `φ_0 .. φ_m` with `m = row.len()`.
pub fn apply_row(row: &KernelRow, history: &[f64]) -> Result<f64> {
    if history.len() != row.len() + 1 {
        return arg_err(format!(
            "history has {} values, row of length {} needs {}",
            history.len(),
            row.len(),
            row.len() + 1
        ));
    }
    Ok(row
        .coeffs
        .iter()
        .zip(history.windows(2))
        .map(|(c, w)| c * (w[1] - w[0]))
        .sum())
}

/// Largest kernel error over all rows of an `n`-step grid on `[ã, t_end]` for
/// `φ(t) = (log(t/ã))^p`, measured against [`ch_derivative_logpower`].
pub fn max_truncation_error(scheme: Scheme, alpha: f64, a_tilde: f64, t_end: f64, n: usize, p: f64) -> Result<f64> {
    let grid = TemporalGrid::new(a_tilde, t_end, n, alpha)?;
    let hist: Vec<f64> = (0..=n).map(|i| pow(grid.log_ratio(i, 0.0, 0), p)).collect();
    let steps: Vec<usize> = match scheme {
        Scheme::L2Sigma => (0..n).collect(),
        Scheme::L12 => (1..=n).collect(),
    };
    let mut worst: f64 = 0.0;
    for k in steps {
        let row = match scheme {
            Scheme::L2Sigma => l2sigma_row(&grid, k)?,
            Scheme::L12 => l12_row(&grid, k)?,
        };
        let got = apply_row(&row, &hist[..=row.len()])?;
        let exact = ch_derivative_logpower(p, alpha, a_tilde, row.eval_time(&grid))?;
        worst = worst.max((got - exact).abs());
    }
    Ok(worst)
}

/// Closed-form Caputo-Hadamard derivative of `φ(t) = (log(t/ã))^p`:
/// `Γ(p+1) / Γ(p+1-α) · (log(t/ã))^{p-α}`.
pub fn ch_derivative_logpower(p: f64, alpha: f64, a_tilde: f64, t: f64) -> Result<f64> {
    if p < 1.0 {
        return arg_err(format!("log-power exponent must be >= 1, got {p}"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return arg_err(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if !(a_tilde > 0.0) || t < a_tilde {
        return arg_err(format!("need 0 < a_tilde <= t, got a_tilde={a_tilde}, t={t}"));
    }
    let w = ((t - a_tilde) / a_tilde).ln_1p();
    Ok(gamma(p + 1.0) / gamma(p + 1.0 - alpha) * pow(w, p - alpha))
}

/// Weights `(1-σ, σ)` of `φ(t_{k+σ}) ≈ (1-σ)φ(t_k) + σφ(t_{k+1})`.
pub fn sigma_interp_weights(sigma: f64) -> (f64, f64) {
    debug_assert!(sigma > 0.0 && sigma < 1.0);
    (1.0 - sigma, sigma)
}
