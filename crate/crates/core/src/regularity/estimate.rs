use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lateral_grid::{fourier_forward, Field};

/// Shells whose mean energy falls below this fraction of the peak are treated
/// as roundoff and excluded from fits.
pub const ROUNDOFF_FLOOR: f64 = 1e-28;

/// Exponents above this are reported as smooth rather than as a number.
pub const SMOOTH_EXPONENT: f64 = 6.0;

/// Minimum ratio `xi_hi / xi_lo` for an estimate to count as reliable.
pub const MIN_SPAN: f64 = 8.0;

/// Fit window as fractions of the per-axis Nyquist frequency `pi N / L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for FitRange {
    fn default() -> Self {
        Self {
            lo: 1.0 / 16.0,
            hi: 0.5,
        }
    }
}

impl FitRange {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "fit range must satisfy 0 < lo < hi <= 1, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Reliable,
    Unreliable,
    /// The spectrum reaches the roundoff floor or decays faster than any
    /// modest power: no finite exponent is resolved.
    Smooth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityEstimate {
    /// Decay rate `p` of the shell-averaged energy, `E(xi) ~ xi^{-p}`.
    pub slope: f64,
    /// Implied largest finite Sobolev exponent `(p - d) / 2`.
    pub exponent: f64,
    pub xi_lo: f64,
    pub xi_hi: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub shells: usize,
    pub status: EstimateStatus,
}

impl RegularityEstimate {
    /// True when the estimate supports at least the exponent `s`
    /// (smooth fields support every exponent).
    pub fn supports(&self, s: f64) -> bool {
        match self.status {
            EstimateStatus::Smooth => true,
            _ => self.exponent >= s,
        }
    }
}

/// Shell-averaged spectral energy: entry `m` is the mean of `|F_k|²` over
/// modes with `round(|xi_k| / dxi) = m`.
pub fn shell_spectrum(f: &Field) -> Vec<f64> {
    let spec = fourier_forward(f);
    let grid = spec.grid();
    let dxi = grid.xi_step();
    let mut sum = Vec::new();
    let mut count = Vec::new();
    for (k, c) in spec.coeffs().iter().enumerate() {
        let m = (grid.xi_squared(k).sqrt() / dxi).round() as usize;
        if m >= sum.len() {
            sum.resize(m + 1, 0.0);
            count.resize(m + 1, 0usize);
        }
        sum[m] += c.norm_sqr();
        count[m] += 1;
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect()
}

/// Least-squares fit `y = a + b x`; returns `(a, b, rms residual)`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

/// Estimates the Sobolev exponent of `f` from the power-law decay of its
/// shell-averaged spectrum over `range`.
pub fn estimate_sobolev_exponent(f: &Field, range: FitRange) -> Result<RegularityEstimate> {
    range.validate()?;
    let grid = f.grid();
    let d = grid.dim() as f64;
    let dxi = grid.xi_step();
    let xi_lo = range.lo * grid.xi_max();
    let xi_hi = range.hi * grid.xi_max();
    let shells = shell_spectrum(f);
    let peak = shells.iter().copied().fold(0.0, f64::max);
    let mut out = RegularityEstimate {
        slope: f64::NAN,
        exponent: f64::NAN,
        xi_lo,
        xi_hi,
        residual: f64::NAN,
        shells: 0,
        status: EstimateStatus::Unreliable,
    };
    if !(peak > 0.0) {
        return Ok(out);
    }
    let floor = ROUNDOFF_FLOOR * peak;
    let in_range: Vec<(f64, f64)> = shells
        .iter()
        .enumerate()
        .map(|(m, &e)| (m as f64 * dxi, e))
        .filter(|&(xi, _)| xi >= xi_lo && xi <= xi_hi)
        .collect();
    let kept: Vec<(f64, f64)> = in_range
        .iter()
        .copied()
        .filter(|&(_, e)| e > floor)
        .collect();
    out.shells = kept.len();
    if in_range.is_empty() {
        return Ok(out);
    }
    if 2 * kept.len() < in_range.len() {
        out.status = EstimateStatus::Smooth;
        return Ok(out);
    }
    if kept.len() < 4 {
        return Ok(out);
    }
    let lx: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let (_, b, res) = linear_fit(&lx, &ly);
    out.slope = -b;
    out.exponent = 0.5 * (out.slope - d);
    out.residual = res;
    out.status = if out.exponent > SMOOTH_EXPONENT {
        EstimateStatus::Smooth
    } else if xi_hi / xi_lo < MIN_SPAN {
        EstimateStatus::Unreliable
    } else {
        EstimateStatus::Reliable
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lateral_grid::LateralGrid;
    use num_complex::Complex64;

    #[test]
    fn linear_fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (a, b, r) = linear_fit(&x, &y);
        assert!((a - 1.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14 && r < 1e-14);
    }

    #[test]
    fn zero_field_is_unreliable() {
        let g = LateralGrid::new(2, 64, 8.0).unwrap();
        let e = estimate_sobolev_exponent(&Field::zeros(&g), FitRange::default()).unwrap();
        assert_eq!(e.status, EstimateStatus::Unreliable);
    }

    #[test]
    fn gaussian_is_smooth() {
        let g = LateralGrid::new(2, 128, 8.0).unwrap();
        let f = Field::from_fn(&g, |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
        });
        let e = estimate_sobolev_exponent(&f, FitRange::default()).unwrap();
        assert_eq!(e.status, EstimateStatus::Smooth);
        assert!(e.supports(10.0));
    }

    #[test]
    fn narrow_range_is_unreliable() {
        let g = LateralGrid::new(2, 128, 8.0).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::new(x[0].hypot(x[1]).sqrt(), 0.0));
        let e = estimate_sobolev_exponent(&f, FitRange { lo: 0.2, hi: 0.5 }).unwrap();
        assert_eq!(e.status, EstimateStatus::Unreliable);
        assert!(estimate_sobolev_exponent(&f, FitRange { lo: 0.5, hi: 0.2 }).is_err());
    }
}
