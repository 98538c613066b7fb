use serde::{Deserialize, Serialize};

use super::{fourier_forward, Field, SpectralField};
use crate::error::{Error, Result};

/// Supported range of Sobolev exponents.
pub const SOBOLEV_RANGE: (f64, f64) = (-4.0, 4.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevEntry {
    pub s: f64,
    pub norm: f64,
}

/// Ordered `(s, norm)` pairs; serializes as a bare JSON array.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SobolevReport(pub Vec<SobolevEntry>);

impl SobolevReport {
    pub fn entries(&self) -> &[SobolevEntry] {
        &self.0
    }
}

fn check_exponent(s: f64) -> Result<()> {
    if !(SOBOLEV_RANGE.0..=SOBOLEV_RANGE.1).contains(&s) {
        return Err(Error::InvalidArgument(format!(
            "Sobolev exponent {s} outside [{}, {}]",
            SOBOLEV_RANGE.0, SOBOLEV_RANGE.1
        )));
    }
    Ok(())
}

fn weighted_norm(spec: &SpectralField, s: f64) -> f64 {
    let grid = spec.grid();
    spec.coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| (1.0 + grid.xi_squared(k)).powf(s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Discrete `H^s` norm `(sum_k (1 + |xi_k|²)^s |F_k|²)^{1/2}`.
pub fn sobolev_norm(f: &Field, s: f64) -> Result<f64> {
    check_exponent(s)?;
    Ok(weighted_norm(&fourier_forward(f), s))
}

/// [`sobolev_norm`] at several exponents, sharing one transform.
pub fn sobolev_spectrum(f: &Field, s_values: &[f64]) -> Result<SobolevReport> {
    if s_values.is_empty() {
        return Err(Error::InvalidArgument(
            "no Sobolev exponents requested".into(),
        ));
    }
    for &s in s_values {
        check_exponent(s)?;
    }
    let spec = fourier_forward(f);
    Ok(SobolevReport(
        s_values
            .iter()
            .map(|&s| SobolevEntry {
                s,
                norm: weighted_norm(&spec, s),
            })
            .collect(),
    ))
}
