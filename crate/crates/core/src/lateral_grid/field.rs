use std::sync::Arc;

use num_complex::Complex64;

use super::LateralGrid;
use crate::error::{Error, Result};

/// Complex lateral samples at a fixed depth `z` and frequency `tau`.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<LateralGrid>,
    values: Vec<Complex64>,
    pub z: f64,
    pub tau: f64,
}

impl Field {
    pub fn new(grid: Arc<LateralGrid>, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self {
            grid,
            values,
            z: 0.0,
            tau: 0.0,
        })
    }

    pub fn zeros(grid: &Arc<LateralGrid>) -> Self {
        Self {
            values: vec![Complex64::default(); grid.len()],
            grid: grid.clone(),
            z: 0.0,
            tau: 0.0,
        }
    }

    pub fn from_fn(grid: &Arc<LateralGrid>, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        Self {
            values: grid.points().map(f).collect(),
            grid: grid.clone(),
            z: 0.0,
            tau: 0.0,
        }
    }

    pub fn from_real(grid: &Arc<LateralGrid>, values: &[f64]) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self {
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            grid: grid.clone(),
            z: 0.0,
            tau: 0.0,
        })
    }

    /// The plane wave `exp(i xi_k . x)` for the signed mode `k`.
    pub fn plane_wave(grid: &Arc<LateralGrid>, k: [i64; 2]) -> Self {
        let dk = grid.xi_step();
        let xi = [dk * k[0] as f64, dk * k[1] as f64];
        Self::from_fn(grid, |x| {
            Complex64::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1])
        })
    }

    pub fn with_meta(mut self, z: f64, tau: f64) -> Self {
        self.z = z;
        self.tau = tau;
        self
    }

    pub fn grid(&self) -> &Arc<LateralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Builds a field on the same grid with the same metadata.
    pub fn like(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            grid: self.grid.clone(),
            values,
            z: self.z,
            tau: self.tau,
        }
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn check_on(&self, grid: &LateralGrid) -> Result<()> {
        if self.grid.same_shape(grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Discrete L² norm `(h^d sum |f_j|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `<self, other> = h^d sum self_j conj(other_j)`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_compatible(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: Complex64) -> Field {
        self.like(self.values.iter().map(|v| v * a).collect())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        Ok(self.like(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        Ok(self.like(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &Field) -> Result<()> {
        self.check_compatible(other)?;
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(s, o)| *s += a * o);
        Ok(())
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        Ok(self.like(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        ))
    }

    pub fn mul_real(&self, weights: &[f64]) -> Result<Field> {
        self.grid.check_len(weights.len())?;
        Ok(self.like(
            self.values
                .iter()
                .zip(weights)
                .map(|(a, w)| a * w)
                .collect(),
        ))
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Relative L² distance `|self - other| / |other|` (absolute when `other` vanishes).
    pub fn relative_distance(&self, other: &Field) -> Result<f64> {
        let d = self.sub(other)?.l2_norm();
        let n = other.l2_norm();
        Ok(if n > 0.0 { d / n } else { d })
    }
}

/// Unitary-normalized Fourier coefficients of a [`Field`], stored in FFT order.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<LateralGrid>,
    coeffs: Vec<Complex64>,
    pub z: f64,
    pub tau: f64,
}

impl SpectralField {
    pub fn new(grid: Arc<LateralGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        grid.check_len(coeffs.len())?;
        Ok(Self {
            grid,
            coeffs,
            z: 0.0,
            tau: 0.0,
        })
    }

    pub fn grid(&self) -> &Arc<LateralGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of the signed mode `k`; zero for modes outside the grid.
    pub fn coeff(&self, k: [i64; 2]) -> Complex64 {
        self.grid
            .index_of_mode(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn fourier_forward(f: &Field) -> SpectralField {
    let mut coeffs = f.values.clone();
    f.grid.forward_in_place(&mut coeffs);
    SpectralField {
        grid: f.grid.clone(),
        coeffs,
        z: f.z,
        tau: f.tau,
    }
}

pub fn fourier_inverse(spec: &SpectralField) -> Field {
    let mut values = spec.coeffs.clone();
    spec.grid.inverse_in_place(&mut values);
    Field {
        grid: spec.grid.clone(),
        values,
        z: spec.z,
        tau: spec.tau,
    }
}

/// Spectral partial derivative along `axis` (Nyquist mode zeroed).
pub fn spectral_derivative(f: &Field, axis: usize) -> Result<Field> {
    let grid = &f.grid;
    if axis >= grid.dim() {
        return Err(Error::AxisOutOfRange {
            axis,
            dim: grid.dim(),
        });
    }
    let mut buf = f.values.clone();
    grid.forward_in_place(&mut buf);
    for (idx, c) in buf.iter_mut().enumerate() {
        *c *= Complex64::new(0.0, grid.derivative_symbol(idx, axis));
    }
    grid.inverse_in_place(&mut buf);
    Ok(f.like(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_values(grid: &Arc<LateralGrid>, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::new(grid.clone(), v).unwrap()
    }

    #[test]
    fn constant_field_is_pure_dc() {
        let g = LateralGrid::new(1, 8, 3.0).unwrap();
        let f = Field::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        let s = fourier_forward(&f);
        assert!((s.coeff([0, 0]) - Complex64::new(3.0f64.sqrt(), 0.0)).norm() < 1e-14);
        for k in 1..8 {
            assert!(s.coeffs()[k].norm() < 1e-14);
        }
    }

    #[test]
    fn plane_wave_has_single_coefficient() {
        for dim in [1, 2] {
            let g = LateralGrid::new(dim, 8, 2.0).unwrap();
            let f = Field::plane_wave(&g, [1, 0]);
            let s = fourier_forward(&f);
            let peak = g.index_of_mode([1, 0]).unwrap();
            for (i, c) in s.coeffs().iter().enumerate() {
                if i == peak {
                    assert!((c.norm() - g.measure().sqrt()).abs() < 1e-12);
                } else {
                    assert!(c.norm() < 1e-12, "leak at {i}: {c}");
                }
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for dim in [1, 2] {
            let g = LateralGrid::new(dim, 32, 7.0).unwrap();
            let f = random_values(&g, 3);
            let s = fourier_forward(&f);
            assert!((s.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
            let back = fourier_inverse(&s);
            assert!(back.relative_distance(&f).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = LateralGrid::new(2, 32, 4.0).unwrap();
        let xi = g.xi_step() * 3.0;
        let f = Field::from_fn(&g, |x| Complex64::new((xi * x[1]).sin(), 0.0));
        let d = spectral_derivative(&f, 1).unwrap();
        let expect = Field::from_fn(&g, |x| Complex64::new(xi * (xi * x[1]).cos(), 0.0));
        assert!(d.sub(&expect).unwrap().max_abs() < 1e-10);
        let d0 = spectral_derivative(&f, 0).unwrap();
        assert!(d0.max_abs() < 1e-10);
    }

    #[test]
    fn derivative_of_constant_vanishes_and_axis_checked() {
        let g = LateralGrid::new(1, 16, 1.0).unwrap();
        let f = Field::from_fn(&g, |_| Complex64::new(2.5, -1.0));
        assert!(spectral_derivative(&f, 0).unwrap().max_abs() < 1e-12);
        assert!(matches!(
            spectral_derivative(&f, 1),
            Err(Error::AxisOutOfRange { axis: 1, dim: 1 })
        ));
    }

    #[test]
    fn derivative_keeps_real_fields_real() {
        let g = LateralGrid::new(2, 16, 3.0).unwrap();
        let f = random_values(&g, 9);
        let real = f.like(
            f.values()
                .iter()
                .map(|v| Complex64::new(v.re, 0.0))
                .collect(),
        );
        let d = spectral_derivative(&real, 0).unwrap();
        assert!(d.values().iter().all(|v| v.im.abs() < 1e-12));
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let g = LateralGrid::new(2, 8, 1.0).unwrap();
        assert!(matches!(
            Field::new(g, vec![Complex64::default(); 10]),
            Err(Error::SizeMismatch {
                expected: 64,
                got: 10
            })
        ));
    }
}
