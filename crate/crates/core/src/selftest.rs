//! Randomized property suite behind `ultraslow-fde selftest`.
//!
//! Each check draws its samples from a seeded ChaCha stream, so a given seed always
//! exercises the same cases. A check passes only if every sample satisfies it.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::{BttbSpectrum, ToeplitzSpectrum};
use crate::spatial::{
    fcd_coeffs_2d, frac_laplacian_apply_2d, frac_laplacian_apply_2d_direct, gl_weights, riesz_apply,
    riesz_apply_direct, riesz_stencil, SpatialGrid1D, SpatialGrid2D,
};
use crate::special::gamma;
use crate::temporal::{l12_row, l2sigma_row, TemporalGrid};

/// Margin below the L1-2 stability threshold used when sampling α.
pub const L12_SAMPLE_LIMIT: f64 = 0.37;

#[derive(Debug, Clone)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Random `(α, ã, N)` draws per coefficient check.
    pub samples: usize,
    /// Random fields per quadratic-form check.
    pub fields: usize,
    /// Largest `m` in the stencil partial-sum checks.
    pub max_m: usize,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_607,
            samples: 200,
            fields: 50,
            max_m: 4096,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// First violation, or a summary when everything held.
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<28} {:>6} cases  {}", self.name, self.cases, self.detail)
    }
}

struct Check {
    name: &'static str,
    cases: usize,
    failure: Option<String>,
    worst: f64,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failure: None, worst: 0.0 }
    }

    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(what());
        }
    }

    // records a relative discrepancy and fails it above `tol`
    fn close(&mut self, rel: f64, tol: f64, what: impl FnOnce() -> String) {
        self.worst = self.worst.max(rel);
        self.expect(rel <= tol, what);
    }

    fn error(&mut self, e: crate::Error) {
        self.expect(false, || format!("error: {e}"));
    }

    fn finish(self) -> CheckResult {
        let passed = self.failure.is_none() && self.cases > 0;
        let detail = match self.failure {
            Some(f) => f,
            None if self.worst > 0.0 => format!("worst relative discrepancy {:.2e}", self.worst),
            None => "ok".into(),
        };
        CheckResult { name: self.name, passed, cases: self.cases, detail }
    }
}

fn run(name: &'static str, body: impl FnOnce(&mut Check) -> Result<()>) -> CheckResult {
    let mut c = Check::new(name);
    if let Err(e) = body(&mut c) {
        c.error(e);
    }
    c.finish()
}

/// Random temporal grid with `τ <= ã/64`.
fn sample_grid(rng: &mut ChaCha8Rng, alpha: f64) -> Result<TemporalGrid> {
    let a_tilde = rng.gen_range(0.5..2.0);
    let n: usize = rng.gen_range(4..=160);
    let tau = a_tilde / 64.0 * 2f64.powf(-rng.gen_range(0.0..4.0));
    TemporalGrid::new(a_tilde, a_tilde + n as f64 * tau, n, alpha)
}

fn strictly_increasing(c: &[f64]) -> bool {
    c[0] > 0.0 && c.windows(2).all(|w| w[1] > w[0])
}

fn l2sigma_lemmas(cfg: &SelftestConfig) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut inc = Check::new("l2sigma_rows_increasing");
    let mut lead = Check::new("l2sigma_leading_dominance");
    let mut first = Check::new("l2sigma_first_coeff_bound");
    for _ in 0..cfg.samples {
        let alpha = rng.gen_range(0.001..0.999);
        let grid = match sample_grid(&mut rng, alpha) {
            Ok(g) => g,
            Err(e) => {
                inc.error(e);
                continue;
            }
        };
        let (sigma, tau, at) = (grid.sigma(), grid.tau(), grid.a_tilde());
        let bound_const = 2.0 * gamma(1.0 - alpha) / at.powf(alpha);
        for k in 0..grid.steps() {
            let row = match l2sigma_row(&grid, k) {
                Ok(r) => r,
                Err(e) => {
                    inc.error(e);
                    break;
                }
            };
            let c = row.coeffs();
            let ctx = || format!("α={alpha:.4} ã={at:.3} τ={tau:.3e} k={k}");
            inc.expect(strictly_increasing(c), || format!("row not positive increasing at {}", ctx()));
            if k >= 1 {
                lead.expect((2.0 * sigma - 1.0) * c[k] > sigma * c[k - 1], || {
                    format!("(2σ-1)c_(k+1,k) <= σc_(k,k) at {}", ctx())
                });
            }
            let bound = bound_const * ((k as f64 + sigma) * tau).powf(alpha);
            first.expect(1.0 / c[0] < bound, || format!("1/c_(1,k) >= bound at {}", ctx()));
        }
    }
    vec![inc.finish(), lead.finish(), first.finish()]
}

fn l12_lemmas(cfg: &SelftestConfig) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9);
    let mut sign = Check::new("l12_sign_pattern");
    for _ in 0..cfg.samples {
        let alpha = rng.gen_range(0.001..0.999);
        let grid = match sample_grid(&mut rng, alpha) {
            Ok(g) => g,
            Err(e) => {
                sign.error(e);
                continue;
            }
        };
        for k in 2..=grid.steps() {
            let row = match l12_row(&grid, k) {
                Ok(r) => r,
                Err(e) => {
                    sign.error(e);
                    break;
                }
            };
            let c = row.coeffs();
            let ctx = || format!("α={alpha:.4} ã={:.3} τ={:.3e} k={k}", grid.a_tilde(), grid.tau());
            sign.expect(c[k - 1] > c[k - 2].abs(), || format!("c_(k,k) <= |c_(k-1,k)| at {}", ctx()));
            match k {
                2 => sign.expect(c[1] > 0.0, || format!("c_(2,2) <= 0 at {}", ctx())),
                3 => sign.expect(c[2] > c[0] && c[0] > 0.0, || format!("c_(3,3) > c_(1,3) > 0 fails at {}", ctx())),
                _ => {
                    // c_(k-1,k) is excluded: it may be small or negative
                    let head = &c[..k - 2];
                    sign.expect(strictly_increasing(head) && c[k - 1] > c[k - 3], || {
                        format!("c_(k,k) > c_(k-2,k) > ... > c_(1,k) > 0 fails at {}", ctx())
                    })
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7f4a_7c15);
    let mut inc = Check::new("l12_rows_increasing");
    let mut first = Check::new("l12_first_coeff_bound");
    for _ in 0..cfg.samples {
        let alpha = rng.gen_range(0.001..L12_SAMPLE_LIMIT);
        let grid = match sample_grid(&mut rng, alpha) {
            Ok(g) => g,
            Err(e) => {
                inc.error(e);
                continue;
            }
        };
        let at = grid.a_tilde();
        let big_c = (6.0 * gamma(1.0 - alpha) / at.powf(alpha)).max(3.0 * gamma(2.0 - alpha) / (alpha * at.powf(alpha)));
        for k in 1..=grid.steps() {
            let row = match l12_row(&grid, k) {
                Ok(r) => r,
                Err(e) => {
                    inc.error(e);
                    break;
                }
            };
            let c = row.coeffs();
            let ctx = || format!("α={alpha:.4} ã={at:.3} τ={:.3e} k={k}", grid.tau());
            if k >= 2 {
                inc.expect(strictly_increasing(c), || format!("row not positive increasing at {}", ctx()));
            }
            let bound = big_c * (k as f64 * grid.tau()).powf(alpha);
            first.expect(1.0 / c[0] < bound, || format!("1/c_(1,k) >= C(kτ)^α at {}", ctx()));
        }
    }
    vec![sign.finish(), inc.finish(), first.finish()]
}

const STENCIL_BETAS: [f64; 5] = [1.1, 1.3, 1.5, 1.7, 1.9];

fn stencil_checks(cfg: &SelftestConfig) -> Vec<CheckResult> {
    let g = run("gl_weights", |c| {
        for beta in STENCIL_BETAS {
            let w = gl_weights(beta, cfg.max_m + 1)?;
            c.expect(w[0] == 1.0 && (w[1] + beta).abs() <= 4.0 * f64::EPSILON, || {
                format!("g_0, g_1 wrong at β={beta}")
            });
            c.expect(w[2] <= 1.0 && w[2..].windows(2).all(|p| p[0] >= p[1] && p[1] >= 0.0), || {
                format!("tail not nonincreasing nonnegative at β={beta}")
            });
            let mut sum = w[0];
            for (m, gk) in w.iter().enumerate().skip(1) {
                sum += gk;
                c.expect(sum < 0.0, || format!("partial sum to m={m} is {sum:e} at β={beta}"));
            }
        }
        Ok(())
    });
    let r = run("riesz_signs_partial_sums", |c| {
        for beta in STENCIL_BETAS {
            let s = riesz_stencil(beta, cfg.max_m)?;
            let r = s.r();
            c.expect(r[0] > 0.0 && r[1..].iter().all(|&x| x < 0.0), || format!("sign pattern broken at β={beta}"));
            for m in 2..=cfg.max_m {
                let lower = s.c_star() / (m as f64).powf(beta);
                let ps = s.partial_sum(m);
                c.expect(ps > lower && lower > 0.0, || {
                    format!("partial sum {ps:e} <= c*/m^β = {lower:e} at β={beta}, m={m}")
                });
            }
        }
        Ok(())
    });
    vec![g, r]
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // mix smooth and rough components so both ends of the spectrum are probed
    let k = rng.gen_range(1.0..8.0);
    let phase = rng.gen_range(0.0..PI);
    let rough = rng.gen_range(0.0..1.0);
    (0..n)
        .map(|i| (k * i as f64 / n as f64 * PI + phase).sin() + rough * rng.gen_range(-1.0..1.0))
        .collect()
}

fn quadratic_forms(cfg: &SelftestConfig) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x51_7cc1);
    let one = run("riesz_quadratic_form", |c| {
        for _ in 0..cfg.fields {
            let beta = rng.gen_range(1.01..1.99);
            let m = rng.gen_range(4..=512);
            let a = rng.gen_range(-2.0..1.0);
            let b = a + rng.gen_range(0.5..3.0);
            let grid = SpatialGrid1D::new(a, b, m)?;
            let s = riesz_stencil(beta, m)?;
            let mut v = random_field(&mut rng, m + 1);
            v[0] = 0.0;
            v[m] = 0.0;
            let w = riesz_apply(&s, &grid, &v)?;
            let h = grid.h();
            let q: f64 = h * w.iter().zip(&v[1..m]).map(|(x, y)| x * y).sum::<f64>();
            let nv: f64 = h * v.iter().map(|x| x * x).sum::<f64>();
            let lower = s.c_star() / (b - a).powf(beta) * nv;
            c.expect(q >= lower * (1.0 - 1e-12) && q > 0.0, || {
                format!("form {q:e} below c*/(b-a)^β·‖v‖² = {lower:e} (β={beta:.3}, M={m})")
            });
        }
        Ok(())
    });
    let two = run("fcd_quadratic_form", |c| {
        for _ in 0..cfg.fields {
            let beta = rng.gen_range(1.01..1.99);
            let m = rng.gen_range(4..=48);
            let l = rng.gen_range(0.5..2.0);
            let grid = SpatialGrid2D::new(l, m)?;
            let s = fcd_coeffs_2d(beta, m, 512)?;
            let n = grid.interior();
            let v = random_field(&mut rng, n * n);
            let w = frac_laplacian_apply_2d(&s, &grid, &v)?;
            let h2 = grid.h() * grid.h();
            let q: f64 = h2 * w.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
            let nv: f64 = h2 * v.iter().map(|x| x * x).sum::<f64>();
            let upper = 2f64.powf(beta / 2.0) * PI.powf(beta) * grid.h().powf(-beta) * nv;
            c.expect(q > 0.0 && q <= upper * (1.0 + 1e-12), || {
                format!("form {q:e} outside (0, {upper:e}] (β={beta:.3}, M={m})")
            });
        }
        Ok(())
    });
    vec![one, two]
}

fn rel_diff(a: &[f64], b: &[f64], scale: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

trait Multiply {
    fn fast(&self, x: &[f64], y: &mut [f64]);
    fn direct(&self, x: &[f64], y: &mut [f64]);
}

impl Multiply for ToeplitzSpectrum {
    fn fast(&self, x: &[f64], y: &mut [f64]) {
        self.multiply(x, y)
    }
    fn direct(&self, x: &[f64], y: &mut [f64]) {
        self.multiply_direct(x, y)
    }
}

impl Multiply for BttbSpectrum {
    fn fast(&self, x: &[f64], y: &mut [f64]) {
        self.multiply(x, y)
    }
    fn direct(&self, x: &[f64], y: &mut [f64]) {
        self.multiply_direct(x, y)
    }
}

fn mat(t: &impl Multiply, x: &[f64], direct: bool) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    if direct {
        t.direct(x, &mut y);
    } else {
        t.fast(x, &mut y);
    }
    y
}

fn fft_equivalence(cfg: &SelftestConfig) -> Vec<CheckResult> {
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xfee1);
    let toeplitz = run("toeplitz_fft_vs_direct", |c| {
        for n in 1..=16 {
            for _ in 0..4 {
                let col = random_field(&mut rng, n);
                let x = random_field(&mut rng, n);
                let t = ToeplitzSpectrum::new(col)?;
                let scale = t.norm_bound() * norm(&x);
                let d = rel_diff(&mat(&t, &x, false), &mat(&t, &x, true), scale);
                c.close(d, TOL, || format!("n={n}: relative difference {d:e}"));
            }
        }
        Ok(())
    });
    let bttb = run("bttb_fft_vs_direct", |c| {
        for n in 1..=16 {
            for _ in 0..2 {
                let table = random_field(&mut rng, n * n);
                let x = random_field(&mut rng, n * n);
                let t = BttbSpectrum::new(n, table)?;
                let scale = t.norm_bound() * norm(&x);
                let d = rel_diff(&mat(&t, &x, false), &mat(&t, &x, true), scale);
                c.close(d, TOL, || format!("n={n}: relative difference {d:e}"));
            }
        }
        Ok(())
    });
    let riesz = run("riesz_fft_vs_direct", |c| {
        for m in 2..=16 {
            let beta = rng.gen_range(1.01..1.99);
            let grid = SpatialGrid1D::new(0.0, 1.0, m)?;
            let s = riesz_stencil(beta, m)?;
            let mut v = random_field(&mut rng, m + 1);
            v[0] = 0.0;
            v[m] = 0.0;
            let scale = 2.0 * s.r()[0] * grid.h().powf(-beta) * norm(&v);
            let d = rel_diff(&riesz_apply(&s, &grid, &v)?, &riesz_apply_direct(&s, &grid, &v)?, scale);
            c.close(d, TOL, || format!("M={m}: relative difference {d:e}"));
        }
        Ok(())
    });
    let fcd = run("fcd_fft_vs_direct", |c| {
        for m in 2..=17 {
            let beta = rng.gen_range(1.01..1.99);
            let grid = SpatialGrid2D::new(1.0, m)?;
            let s = fcd_coeffs_2d(beta, m, 512)?;
            let n = grid.interior();
            let v = random_field(&mut rng, n * n);
            let scale = 2f64.powf(1.5 * beta) * grid.h().powf(-beta) * norm(&v);
            let d = rel_diff(
                &frac_laplacian_apply_2d(&s, &grid, &v)?,
                &frac_laplacian_apply_2d_direct(&s, &grid, &v)?,
                scale,
            );
            c.close(d, TOL, || format!("M={m}: relative difference {d:e}"));
        }
        Ok(())
    });
    vec![toeplitz, bttb, riesz, fcd]
}

/// Runs every check and returns one result per property.
pub fn run_selftest(cfg: &SelftestConfig) -> Vec<CheckResult> {
    let mut out = l2sigma_lemmas(cfg);
    out.extend(l12_lemmas(cfg));
    out.extend(stencil_checks(cfg));
    out.extend(quadratic_forms(cfg));
    out.extend(fft_equivalence(cfg));
    out
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cfg = SelftestConfig { samples: 20, fields: 5, max_m: 256, ..Default::default() };
        let results = run_selftest(&cfg);
        assert_eq!(results.len(), 14);
        for r in &results {
            assert!(r.passed, "{r}");
            assert!(r.cases > 0);
        }
    }

    #[test]
    fn failures_keep_the_first_violation() {
        let mut c = Check::new("demo");
        c.expect(true, || unreachable!());
        c.expect(false, || "first".into());
        c.expect(false, || "second".into());
        let r = c.finish();
        assert!(!r.passed);
        assert_eq!(r.cases, 3);
        assert_eq!(r.detail, "first");
        assert!(r.to_string().starts_with("FAIL demo"));
    }

    #[test]
    fn same_seed_same_cases() {
        let cfg = SelftestConfig { samples: 5, fields: 2, max_m: 64, ..Default::default() };
        let a: Vec<String> = run_selftest(&cfg).iter().map(|r| r.to_string()).collect();
        let b: Vec<String> = run_selftest(&cfg).iter().map(|r| r.to_string()).collect();
        assert_eq!(a, b);
    }
}
