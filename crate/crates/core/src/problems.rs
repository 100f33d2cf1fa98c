//! Benchmark problems with known solutions.
//!
//! * Example 1: `u = (log t)³ x⁴(1-x)⁴` on `[0,1]`, `t ∈ [1,2]`, with a closed-form source.
//! * Example 2: `u = (log t)³ (1-x²)⁴(1-y²)⁴` on `(-1,1)²`, `t ∈ [1,2]`. The fractional
//!   Laplacian of the profile has no simple closed form, so the source is built from a
//!   fine-mesh discrete operator (see [`DiscreteSource`]).

use std::f64::consts::PI;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{arg_err, Result};
use crate::solver1d::Problem1D;
use crate::solver2d::{DiscreteSource, Problem2D, Source2D, DEFAULT_H_REF};
use crate::special::gamma;

fn check_orders(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return arg_err(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if !(beta > 1.0 && beta < 2.0) {
        return arg_err(format!("beta must lie in (1, 2), got {beta}"));
    }
    Ok(())
}

pub fn example1_exact(x: f64, t: f64) -> f64 {
    t.ln().powi(3) * (x * (1.0 - x)).powi(4)
}

/// `-∂^β_x [x⁴(1-x)⁴]` for the Riesz derivative on `[0,1]`, i.e. what `h^{-β}Σ r_{j-k}v_k`
/// approximates.
///
/// Expanding `x⁴(1-x)⁴ = Σ_l C(4,l)(-1)^l x^{4+l}`, each left Riemann-Liouville derivative
/// is `Γ(5+l)/Γ(5+l-β) x^{4+l-β}` and the right one mirrors it in `1-x`.
pub fn example1_neg_riesz(beta: f64, x: f64) -> f64 {
    let psi = 1.0 / (2.0 * (PI * beta / 2.0).cos());
    let mut s = 0.0;
    let mut binom = 1.0;
    for l in 0..=4 {
        let coeff = binom * gamma(5.0 + l as f64) / gamma(5.0 + l as f64 - beta);
        let e = 4.0 + l as f64 - beta;
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * coeff * (x.max(0.0).powf(e) + (1.0 - x).max(0.0).powf(e));
        binom = binom * (4 - l) as f64 / (l + 1) as f64;
    }
    psi * s
}

/// Example 1 on `[0,1] x [1,2]` with zero initial data.
pub fn example1_problem(alpha: f64, beta: f64) -> Result<Problem1D> {
    check_orders(alpha, beta)?;
    let time_coeff = 6.0 / gamma(4.0 - alpha);
    Ok(Problem1D {
        alpha,
        beta,
        a_tilde: 1.0,
        t_end: 2.0,
        a: 0.0,
        b: 1.0,
        u0: Arc::new(|_| 0.0),
        f: Arc::new(move |x, t| {
            let lt = t.ln();
            let profile = (x * (1.0 - x)).powi(4);
            time_coeff * profile * lt.max(0.0).powf(3.0 - alpha) + lt.powi(3) * example1_neg_riesz(beta, x)
        }),
        exact: Some(Arc::new(example1_exact)),
    })
}

pub fn example2_profile(x: f64, y: f64) -> f64 {
    if x.abs() >= 1.0 || y.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - x * x).powi(4) * (1.0 - y * y).powi(4)
    }
}

pub fn example2_exact(x: f64, y: f64, t: f64) -> f64 {
    t.ln().powi(3) * example2_profile(x, y)
}

/// Example 2 on `(-1,1)² x [1,2]`; the source uses the reference mesh `h_ref`
/// (pass [`DEFAULT_H_REF`] for `2^{-8}`).
pub fn example2_problem(alpha: f64, beta: f64, h_ref: f64) -> Result<Problem2D> {
    check_orders(alpha, beta)?;
    if !(h_ref > 0.0 && h_ref < 1.0) {
        return arg_err(format!("h_ref must lie in (0, 1), got {h_ref}"));
    }
    Ok(Problem2D {
        alpha,
        beta,
        a_tilde: 1.0,
        t_end: 2.0,
        l: 1.0,
        u0: Arc::new(|_, _| 0.0),
        source: Source2D::Discrete(shared_source(beta, h_ref)),
        exact: Some(Arc::new(example2_exact)),
    })
}

// The reference-mesh term depends on (β, h_ref) only, so problems that differ in α
// share one source and compute it once per process.
fn shared_source(beta: f64, h_ref: f64) -> DiscreteSource {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), DiscreteSource>>> = OnceLock::new();
    let mut map = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    map.entry((beta.to_bits(), h_ref.to_bits()))
        .or_insert_with(|| DiscreteSource::new(3.0, Arc::new(example2_profile), h_ref))
        .clone()
}

/// Example 2 with the default reference mesh.
pub fn example2_default(alpha: f64, beta: f64) -> Result<Problem2D> {
    example2_problem(alpha, beta, DEFAULT_H_REF)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{riesz_apply, riesz_stencil, SpatialGrid1D};

    #[test]
    fn exact_values() {
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(example1_exact(x, 1.0), 0.0);
        }
        let v = example1_exact(0.5, 2.0);
        assert!((v - 1.300_877_546_831_755_6e-3).abs() < 1e-17);
        assert!((example2_exact(0.0, 0.0, 2.0) - 0.333_024_651_988_929_44).abs() < 1e-15);
        assert_eq!(example2_exact(1.0, 0.3, 2.0), 0.0);
        assert_eq!(example2_exact(0.2, -1.0, 2.0), 0.0);
    }

    #[test]
    fn problem_shapes() {
        let p = example1_problem(0.3, 1.5).unwrap();
        assert_eq!((p.a, p.b, p.a_tilde, p.t_end), (0.0, 1.0, 1.0, 2.0));
        assert_eq!((p.u0)(0.4), 0.0);
        let mut prev = (p.f)(0.5, 1.0001);
        for i in 1..100 {
            let v = (p.f)(0.5, 1.0001 + i as f64 * 0.01);
            assert!(v.is_finite() && (v - prev).abs() < 0.05);
            prev = v;
        }
        assert!(example1_problem(1.0, 1.5).is_err());
        assert!(example1_problem(0.5, 2.0).is_err());
        let q = example2_default(0.3, 1.5).unwrap();
        assert_eq!((q.u0)(0.1, 0.2), 0.0);
        assert!(matches!(q.source, Source2D::Discrete(ref d) if d.h_ref == 1.0 / 256.0));
        assert!(example2_problem(0.3, 1.5, 0.0).is_err());
    }

    #[test]
    fn neg_riesz_is_symmetric() {
        for beta in [1.2, 1.5, 1.8] {
            for x in [0.1, 0.27, 0.4] {
                let a = example1_neg_riesz(beta, x);
                let b = example1_neg_riesz(beta, 1.0 - x);
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn riesz_stencil_truncation_is_second_order() {
        for beta in [1.3, 1.5, 1.7] {
            let errs: Vec<f64> = [32usize, 64, 128, 256]
                .iter()
                .map(|&m| {
                    let grid = SpatialGrid1D::new(0.0, 1.0, m).unwrap();
                    let s = riesz_stencil(beta, m).unwrap();
                    let v: Vec<f64> = grid.nodes().iter().map(|&x| (x * (1.0 - x)).powi(4)).collect();
                    let w = riesz_apply(&s, &grid, &v).unwrap();
                    let h = grid.h();
                    ((1..m)
                        .map(|j| (w[j - 1] - example1_neg_riesz(beta, grid.x(j))).powi(2))
                        .sum::<f64>()
                        * h)
                        .sqrt()
                })
                .collect();
            for pair in errs.windows(2) {
                let order = (pair[0] / pair[1]).log2();
                assert!((order - 2.0).abs() < 0.1, "beta {beta}: order {order}");
            }
        }
    }
}
