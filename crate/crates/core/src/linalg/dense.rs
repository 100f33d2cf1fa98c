use super::LinearOperator;
use crate::error::{arg_err, Error, Result};

/// Largest system [`dense_solve`] accepts.
pub const DEFAULT_DENSE_CAP: usize = 2048;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return arg_err(format!("{n}x{n} matrix needs {} entries, got {}", n * n, data.len()));
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.n)) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn norm_bound(&self) -> Option<f64> {
        // Frobenius norm
        Some(self.data.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

/// Solves `A x = b` by LU with partial pivoting, for `n ≤ DEFAULT_DENSE_CAP`.
pub fn dense_solve(matrix: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    dense_solve_capped(matrix, rhs, DEFAULT_DENSE_CAP)
}

pub fn dense_solve_capped(matrix: &DenseMatrix, rhs: &[f64], cap: usize) -> Result<Vec<f64>> {
    let n = matrix.n;
    if n > cap {
        return arg_err(format!("dense solve limited to n <= {cap}, got {n}"));
    }
    if rhs.len() != n {
        return arg_err(format!("right-hand side has length {}, matrix is {n}x{n}", rhs.len()));
    }
    let mut a = matrix.data.clone();
    let mut x = rhs.to_vec();
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tiny = scale * n as f64 * f64::EPSILON;
    for col in 0..n {
        let (piv, piv_abs) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(piv_abs > tiny) {
            return Err(Error::Singular(col));
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            x.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f != 0.0 {
                for j in col + 1..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i * n + j] * x[j]).sum();
        x[i] = (x[i] - s) / a[i * n + i];
    }
    Ok(x)
}
