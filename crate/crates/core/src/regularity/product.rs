use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{estimate_sobolev_exponent, EstimateStatus, FitRange};
use crate::error::{Error, Result};
use crate::generator::product_exponent;
use crate::lateral_grid::{fourier_inverse, Field, LateralGrid, SpectralField};

/// Excess decay added to prescribed spectra, so a field built for `s`
/// lies in `H^{s'}` exactly for `s' < s + SPECTRUM_DELTA`.
pub const SPECTRUM_DELTA: f64 = 0.05;

/// Field with `|F_k| = (1 + |xi_k|²)^{-(s + d/2 + delta)/2}` and uniform random
/// phases. `s = inf` gives a Gaussian bump.
pub fn random_field(grid: &Arc<LateralGrid>, s: f64, rng: &mut impl Rng) -> Field {
    if s.is_infinite() && s > 0.0 {
        return Field::from_fn(grid, |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
        });
    }
    let d = grid.dim() as f64;
    let power = -(s + 0.5 * d + SPECTRUM_DELTA) / 2.0;
    let coeffs = (0..grid.len())
        .map(|i| {
            let amp = (1.0 + grid.xi_squared(i)).powf(power);
            Complex64::from_polar(amp, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    fourier_inverse(&SpectralField::new(grid.clone(), coeffs).expect("length matches grid"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductCheckConfig {
    pub base_seed: u64,
    /// Coefficient regularity entering the `r / 4` shift at excluded exponents.
    pub r: f64,
    /// A trial passes when its estimate is at least `predicted - tolerance`.
    pub tolerance: f64,
    /// Fraction of passing trials needed for the check to pass.
    pub pass_fraction: f64,
    pub fit_range: FitRange,
}

impl Default for ProductCheckConfig {
    fn default() -> Self {
        Self {
            base_seed: 0,
            r: 0.5,
            tolerance: 0.2,
            pass_fraction: 0.8,
            fit_range: FitRange::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub exponent: f64,
    pub status: EstimateStatus,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub s1: f64,
    pub s2: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub trials: Vec<TrialResult>,
    pub passed_trials: usize,
    pub pass_fraction: f64,
    pub passed: bool,
}

/// Multiplies random fields of exponents `s1`, `s2` and compares the
/// estimated exponent of the product with `product_exponent(s1, s2, r)`.
///
/// Trial `i` draws both factors from the seed `base_seed + i`.
pub fn product_regularity_check(
    s1: f64,
    s2: f64,
    trials: usize,
    grid: &Arc<LateralGrid>,
    cfg: &ProductCheckConfig,
) -> Result<CheckReport> {
    if grid.dim() != 2 {
        return Err(Error::InvalidArgument(
            "product check needs a 2-D grid".into(),
        ));
    }
    if s1.is_nan() || s2.is_nan() || s1 + s2 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need s1 + s2 >= 0, got {s1} + {s2}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    cfg.fit_range.validate()?;
    let predicted = product_exponent(s1, s2, cfg.r);
    let results = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.base_seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_field(grid, s1, &mut rng);
            let b = random_field(grid, s2, &mut rng);
            let e = estimate_sobolev_exponent(&a.mul(&b)?, cfg.fit_range)?;
            let pass =
                e.status != EstimateStatus::Unreliable && e.supports(predicted - cfg.tolerance);
            Ok(TrialResult {
                seed,
                exponent: e.exponent,
                status: e.status,
                pass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed_trials = results.iter().filter(|t| t.pass).count();
    let fraction = passed_trials as f64 / trials as f64;
    Ok(CheckReport {
        s1,
        s2,
        predicted,
        tolerance: cfg.tolerance,
        trials: results,
        passed_trials,
        pass_fraction: fraction,
        passed: fraction >= cfg.pass_fraction,
    })
}
