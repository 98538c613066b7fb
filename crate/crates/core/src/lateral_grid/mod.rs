//! Periodic spectral discretization of the lateral variable.
//!
//! The lateral space is truncated to the torus `[-L/2, L/2)^d` (d = 1 or 2)
//! and sampled on `N` points per axis. Samples sit at cell centres,
//! `x_j = -L/2 + (j + 1/2) h`, so the origin is never a grid point.
//!
//! Spectra use the unitary normalization `F_k = L^{d/2} N^{-d} sum_j f_j e^{-2 pi i j.k / N}`,
//! under which the discrete L² norm `(h^d sum |f_j|²)^{1/2}` equals the ℓ² norm
//! of the coefficients and a constant field `c` has `F_0 = c L^{d/2}`.

mod field;
pub mod io;
mod sobolev;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use field::{fourier_forward, fourier_inverse, spectral_derivative, Field, SpectralField};
pub use sobolev::{sobolev_norm, sobolev_spectrum, SobolevEntry, SobolevReport, SOBOLEV_RANGE};

/// Uniform periodic grid on the lateral torus.
///
/// Immutable after construction; share it through `Arc`. FFT plans are
/// stored inside and are safe to use from several threads at once.
pub struct LateralGrid {
    dim: usize,
    n: usize,
    length: f64,
    spacing: f64,
    coords: Vec<f64>,
    /// Angular frequencies in FFT order (k = 0, 1, ..., N/2-1, -N/2, ..., -1).
    freqs: Vec<f64>,
    /// Derivative symbol per axis entry: `xi_k`, with the Nyquist entry zeroed.
    deriv: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for LateralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LateralGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl LateralGrid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Arc<Self>> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length must be positive, got {length}"
            )));
        }
        // n is a power of two, so this division is exact and spacing * n == length.
        let spacing = length / n as f64;
        let coords = (0..n)
            .map(|j| -0.5 * length + (j as f64 + 0.5) * spacing)
            .collect();
        let dk = 2.0 * std::f64::consts::PI / length;
        let freqs: Vec<f64> = (0..n).map(|j| dk * signed_index(j, n) as f64).collect();
        let deriv = freqs
            .iter()
            .enumerate()
            .map(|(j, &xi)| if j == n / 2 { 0.0 } else { xi })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self {
            dim,
            n,
            length,
            spacing,
            coords,
            freqs,
            deriv,
            fwd,
            inv,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lebesgue measure of the torus, `L^d`.
    pub fn measure(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Quadrature weight of one sample, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Sample coordinates along one axis.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Position of a flat sample index. The second entry is zero when d = 1.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coords[idx], 0.0],
            _ => [self.coords[idx / self.n], self.coords[idx % self.n]],
        }
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Angular frequencies of one axis in FFT storage order.
    pub fn axis_frequencies(&self) -> &[f64] {
        &self.freqs
    }

    /// Frequency table `xi_k = 2 pi k / L` for `k = -N/2, ..., N/2 - 1`.
    pub fn frequency_table(&self) -> Vec<f64> {
        let half = self.n / 2;
        (0..self.n)
            .map(|i| self.freqs[(i + half) % self.n])
            .collect()
    }

    /// Signed mode numbers of a flat spectral index.
    pub fn mode(&self, idx: usize) -> [i64; 2] {
        match self.dim {
            1 => [signed_index(idx, self.n), 0],
            _ => [
                signed_index(idx / self.n, self.n),
                signed_index(idx % self.n, self.n),
            ],
        }
    }

    /// Flat spectral index of a signed mode, if it exists on this grid.
    pub fn index_of_mode(&self, k: [i64; 2]) -> Option<usize> {
        let wrap = |m: i64| -> Option<usize> {
            let half = (self.n / 2) as i64;
            if m < -half || m >= half {
                None
            } else {
                Some(m.rem_euclid(self.n as i64) as usize)
            }
        };
        match self.dim {
            1 => {
                if k[1] != 0 {
                    return None;
                }
                wrap(k[0])
            }
            _ => Some(wrap(k[0])? * self.n + wrap(k[1])?),
        }
    }

    /// Wave vector of a flat spectral index.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.freqs[idx], 0.0],
            _ => [self.freqs[idx / self.n], self.freqs[idx % self.n]],
        }
    }

    /// `|xi|²` of a flat spectral index.
    pub fn xi_squared(&self, idx: usize) -> f64 {
        let [a, b] = self.wavevector(idx);
        a * a + b * b
    }

    /// Largest resolved frequency per axis, `pi N / L`.
    pub fn xi_max(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / self.length
    }

    /// Fundamental frequency spacing `2 pi / L`.
    pub fn xi_step(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Derivative symbol (without the factor i) of a flat spectral index along
    /// `axis`, with the unpaired Nyquist mode zeroed.
    pub fn derivative_symbol(&self, idx: usize, axis: usize) -> f64 {
        match (self.dim, axis) {
            (1, _) => self.deriv[idx],
            (_, 0) => self.deriv[idx / self.n],
            _ => self.deriv[idx % self.n],
        }
    }

    /// Sum of squared derivative symbols: the symbol of `-Δ` as realized by
    /// two spectral derivatives.
    pub fn laplacian_symbol(&self, idx: usize) -> f64 {
        (0..self.dim)
            .map(|a| self.derivative_symbol(idx, a).powi(2))
            .sum()
    }

    pub fn same_shape(&self, other: &LateralGrid) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: len,
            });
        }
        Ok(())
    }

    /// In-place unitary forward transform of physical samples.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.fwd);
        let scale = self.measure().sqrt() / self.len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    /// In-place inverse of [`forward_in_place`](Self::forward_in_place).
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.inv);
        let scale = 1.0 / self.measure().sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(buf.len(), self.len());
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // rows are contiguous; a single call processes every length-N chunk
        plan.process_with_scratch(buf, &mut scratch);
        if self.dim == 2 {
            let mut tmp = vec![Complex64::default(); buf.len()];
            transpose(buf, &mut tmp, self.n);
            plan.process_with_scratch(&mut tmp, &mut scratch);
            transpose(&tmp, buf, self.n);
        }
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const BLOCK: usize = 16;
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
