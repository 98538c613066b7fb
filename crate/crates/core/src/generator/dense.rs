//! Dense assembly of the discrete operator for small grids.
//!
//! The derivative matrix is built from its closed-form trigonometric sum
//! rather than through FFTs, so it serves as an independent check of the
//! matrix-free code paths.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::FrozenOperator;
use crate::error::{Error, Result};
use crate::lateral_grid::{Field, LateralGrid};

/// Largest number of samples for which dense assembly is allowed.
pub const MAX_DENSE_LEN: usize = 1024;

/// One-axis spectral derivative matrix (Nyquist mode dropped):
/// `D[a][b] = -(1/N) sum_k xi_k sin(2 pi k (a - b) / N)`.
pub fn derivative_matrix(grid: &LateralGrid) -> DMatrix<f64> {
    let n = grid.n();
    let freqs = grid.axis_frequencies();
    DMatrix::from_fn(n, n, |a, b| {
        let m = a as f64 - b as f64;
        let mut s = 0.0;
        for (k, &xi) in freqs.iter().enumerate() {
            if k == n / 2 {
                continue;
            }
            let kk = if k < n / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            };
            s += xi * (2.0 * std::f64::consts::PI * kk * m / n as f64).sin();
        }
        -s / n as f64
    })
}

/// The real symmetric matrix of `A` on row-major samples.
pub fn dense_operator(op: &FrozenOperator) -> Result<DMatrix<f64>> {
    let grid = op.grid();
    let len = grid.len();
    if len > MAX_DENSE_LEN {
        return Err(Error::InvalidArgument(format!(
            "dense assembly limited to {MAX_DENSE_LEN} samples, grid has {len}"
        )));
    }
    let n = grid.n();
    let d1 = derivative_matrix(grid);
    let c = op.coefficient();
    let mut a = DMatrix::<f64>::zeros(len, len);
    if grid.dim() == 1 {
        for p in 0..n {
            for q in 0..n {
                a[(p, q)] = (0..n).map(|r| d1[(p, r)] * c[r] * d1[(r, q)]).sum();
            }
        }
        return Ok(a);
    }
    // axis 0 acts on the slow index, axis 1 on the fast one
    for b in 0..n {
        for p in 0..n {
            for q in 0..n {
                let s0: f64 = (0..n).map(|r| d1[(p, r)] * c[r * n + b] * d1[(r, q)]).sum();
                a[(p * n + b, q * n + b)] += s0;
                let s1: f64 = (0..n).map(|r| d1[(p, r)] * c[b * n + r] * d1[(r, q)]).sum();
                a[(b * n + p, b * n + q)] += s1;
            }
        }
    }
    Ok(a)
}

/// Solves `(lambda - iA) u = f` by dense LU.
pub fn dense_resolvent(op: &FrozenOperator, lambda: f64, f: &Field) -> Result<Field> {
    f.check_on(op.grid())?;
    let a = dense_operator(op)?;
    let len = a.nrows();
    let m = DMatrix::<Complex64>::from_fn(len, len, |i, j| {
        let diag = if i == j { lambda } else { 0.0 };
        Complex64::new(diag, -a[(i, j)])
    });
    let rhs = nalgebra::DVector::from_column_slice(f.values());
    let u = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("singular resolvent matrix".into()))?;
    Ok(f.like(u.as_slice().to_vec()))
}

/// Applies a dense real matrix to a field.
pub fn dense_apply(a: &DMatrix<f64>, v: &Field) -> Field {
    let out = (0..a.nrows())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(v.values())
                .map(|(m, x)| x * *m)
                .sum::<Complex64>()
        })
        .collect();
    v.like(out)
}
