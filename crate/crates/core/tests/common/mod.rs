#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use pxe_core::lateral_grid::{fourier_inverse, SpectralField};
use pxe_core::medium::{build_example_medium, DepthProfile, ExampleParams, Medium};
use pxe_core::{Field, LateralGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const L: f64 = 8.0;

pub fn grid(n: usize) -> Arc<LateralGrid> {
    LateralGrid::new(2, n, L).unwrap()
}

/// Unit-norm field with random coefficients on modes `|k_i| <= kmax`.
pub fn band_limited(grid: &Arc<LateralGrid>, kmax: i64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for (i, c) in coeffs.iter_mut().enumerate() {
        let k = grid.mode(i);
        if k[0].abs() <= kmax && k[1].abs() <= kmax {
            *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let f = fourier_inverse(&SpectralField::new(grid.clone(), coeffs).unwrap());
    let n = f.l2_norm();
    f.scaled((1.0 / n).into())
}

/// White noise, unit norm.
pub fn white(grid: &Arc<LateralGrid>, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..grid.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let f = Field::new(grid.clone(), v).unwrap();
    let n = f.l2_norm();
    f.scaled((1.0 / n).into())
}

pub fn example(alpha: f64, eps: f64) -> Medium {
    build_example_medium(ExampleParams {
        alpha: alpha.into(),
        regularize_eps: eps,
        ..Default::default()
    })
    .unwrap()
}

/// The C¹-in-depth benchmark `chi0(z) = 1 + z/2`, `alpha = 0.5`.
pub fn depth_dependent_example() -> Medium {
    build_example_medium(ExampleParams {
        chi0: DepthProfile::Linear { a: 1.0, b: 0.5 },
        ..Default::default()
    })
    .unwrap()
}

/// `exp(i zeta A) v` for a real symmetric dense `A`, by eigendecomposition.
pub struct DenseGroup {
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl DenseGroup {
    pub fn new(a: DMatrix<f64>) -> Self {
        Self {
            eig: SymmetricEigen::new(a),
        }
    }

    pub fn apply(&self, zeta: f64, v: &Field) -> Field {
        let q = &self.eig.eigenvectors;
        let n = q.nrows();
        let mut coef = vec![Complex64::default(); n];
        for (j, c) in coef.iter_mut().enumerate() {
            let mut s = Complex64::default();
            for i in 0..n {
                s += q[(i, j)] * v.values()[i];
            }
            *c = s * Complex64::from_polar(1.0, zeta * self.eig.eigenvalues[j]);
        }
        let out = (0..n)
            .map(|i| (0..n).map(|j| q[(i, j)] * coef[j]).sum())
            .collect();
        v.like(out)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.eig.eigenvalues.as_slice()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
