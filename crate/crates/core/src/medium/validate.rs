use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Medium, LOWER_BOUND_SLACK, NEAR_ZERO};
use crate::lateral_grid::{Field, LateralGrid};
use crate::regularity::{estimate_sobolev_exponent, EstimateStatus, FitRange};

/// Exponent tolerance of the Fourier-tail clause.
pub const TAIL_TOLERANCE: f64 = 0.1;

/// Relative tolerance of the depth-derivative clause.
pub const DZ_TOLERANCE: f64 = 1e-3;

const DZ_PROBE: f64 = 1e-5;
const SYMBOL_PROBES: usize = 41;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSample {
    pub z: f64,
    pub tau: f64,
    pub min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolCheck {
    pub term: usize,
    pub symbol: String,
    /// Smallest `|h|` sampled on `|tau| <= NEAR_ZERO`.
    pub min_near_zero: f64,
    pub lower_bound: f64,
    /// Largest `|h(tau)| / (K (1 + |tau|)^m)` over the sampled frequencies.
    pub growth_ratio: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DzCheck {
    pub term: usize,
    pub z: f64,
    pub analytic: bool,
    pub relative_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub term: usize,
    pub z: f64,
    pub slope: f64,
    pub exponent: f64,
    pub target: f64,
    pub status: EstimateStatus,
    pub passed: bool,
}

/// Clause-by-clause outcome of the coefficient checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub support: bool,
    pub realness: bool,
    pub lower_bound: bool,
    pub min_c: f64,
    pub violation: Option<LowerBoundSample>,
    pub symbol_bound: bool,
    pub symbols: Vec<SymbolCheck>,
    pub z_regularity: bool,
    pub dz_checks: Vec<DzCheck>,
    pub tail: bool,
    pub tail_checks: Vec<TailCheck>,
    pub passed: bool,
}

pub(super) fn validate(
    m: &Medium,
    z_samples: &[f64],
    tau_samples: &[f64],
    grid: &Arc<LateralGrid>,
) -> ValidationReport {
    let support = m.check_support(grid).is_ok();

    let mut realness = true;
    let mut min_c = f64::INFINITY;
    let mut violation: Option<LowerBoundSample> = None;
    for &z in z_samples {
        for &tau in tau_samples {
            let c = m.sample_c(z, tau, grid);
            if c.iter().any(|v| !v.is_finite()) {
                realness = false;
            }
            let min = c.iter().copied().fold(f64::INFINITY, f64::min);
            min_c = min_c.min(min);
            if min < m.c0() - LOWER_BOUND_SLACK && violation.as_ref().map_or(true, |v| min < v.min)
            {
                violation = Some(LowerBoundSample { z, tau, min });
            }
        }
    }
    let lower_bound = violation.is_none() && realness;

    let symbols: Vec<SymbolCheck> = m
        .terms()
        .iter()
        .enumerate()
        .map(|(l, t)| {
            let s = &t.symbol;
            let min_near_zero = (0..SYMBOL_PROBES)
                .map(|i| {
                    let tau = NEAR_ZERO * (2.0 * i as f64 / (SYMBOL_PROBES - 1) as f64 - 1.0);
                    s.eval(tau).abs()
                })
                .fold(f64::INFINITY, f64::min);
            let k = s.growth_constant();
            let growth_ratio = tau_samples
                .iter()
                .map(|&tau| s.eval(tau).abs() / (k * (1.0 + tau.abs()).powf(s.order())))
                .fold(0.0, f64::max);
            let finite = tau_samples.iter().all(|&tau| s.eval(tau).is_finite());
            SymbolCheck {
                term: l,
                symbol: s.id().to_string(),
                min_near_zero,
                lower_bound: s.lower_bound(),
                growth_ratio,
                passed: finite
                    && s.lower_bound() > 0.0
                    && min_near_zero >= s.lower_bound()
                    && growth_ratio <= 1.0 + 1e-12,
            }
        })
        .collect();
    if symbols.iter().any(|c| c.symbol_is_not_real()) {
        realness = false;
    }
    let symbol_bound = symbols.iter().all(|c| c.passed);

    let mut dz_checks = Vec::new();
    for l in 0..m.terms().len() {
        for &z in z_samples {
            let dz = m.term_dz(l, z, grid);
            let c = m.term_values(l, z, grid);
            let ahead = m.term_values(l, z + DZ_PROBE, grid);
            let err: f64 = ahead
                .iter()
                .zip(&c)
                .zip(&dz)
                .map(|((a, b), d)| ((a - b) / DZ_PROBE - d).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = norm(&dz).max(norm(&c)).max(f64::MIN_POSITIVE);
            let relative_error = err / scale;
            dz_checks.push(DzCheck {
                term: l,
                z,
                analytic: m.terms()[l].coefficient.has_analytic_dz(),
                relative_error,
                passed: relative_error <= DZ_TOLERANCE,
            });
        }
    }
    let z_regularity = dz_checks.iter().all(|c| c.passed);

    let target = m.regularity() + 1.0;
    let mut tail_checks = Vec::new();
    for l in 0..m.terms().len() {
        for &z in z_samples {
            let values = m.term_values(l, z, grid);
            let check = match Field::from_real(grid, &values)
                .and_then(|f| estimate_sobolev_exponent(&f, FitRange::default()))
            {
                Ok(est) => TailCheck {
                    term: l,
                    z,
                    slope: est.slope,
                    exponent: est.exponent,
                    target,
                    status: est.status,
                    passed: match est.status {
                        EstimateStatus::Smooth => true,
                        // too little resolved tail to judge either way
                        EstimateStatus::Unreliable => values.iter().all(|v| v.is_finite()),
                        EstimateStatus::Reliable => est.exponent >= target - TAIL_TOLERANCE,
                    },
                },
                Err(_) => TailCheck {
                    term: l,
                    z,
                    slope: f64::NAN,
                    exponent: f64::NAN,
                    target,
                    status: EstimateStatus::Unreliable,
                    passed: false,
                },
            };
            tail_checks.push(check);
        }
    }
    let tail = tail_checks.iter().all(|c| c.passed);

    ValidationReport {
        support,
        realness,
        lower_bound,
        min_c,
        violation,
        symbol_bound,
        symbols,
        z_regularity,
        dz_checks,
        tail,
        tail_checks,
        passed: support && realness && lower_bound && symbol_bound && z_regularity && tail,
    }
}

impl SymbolCheck {
    fn symbol_is_not_real(&self) -> bool {
        !(self.min_near_zero.is_finite() && self.growth_ratio.is_finite())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{
        build_example_medium, ConstantCoefficient, ExampleParams, FrequencySymbol,
    };

    #[test]
    fn constant_medium_passes_everything() {
        let g = LateralGrid::new(2, 32, 8.0).unwrap();
        let m = Medium::constant(1.0).unwrap();
        let r = m.validate_assumption1(&[0.0, 0.5, 1.0], &[-2.0, 0.0, 2.0], &g);
        assert!(r.passed, "{r:?}");
        assert_eq!(r.min_c, 1.0);
    }

    #[test]
    fn negative_perturbation_fails_lower_bound_only() {
        let g = LateralGrid::new(2, 32, 8.0).unwrap();
        let m = Medium::constant(1.0)
            .unwrap()
            .with_term(Arc::new(ConstantCoefficient(-1.0)), FrequencySymbol::One);
        let r = m.validate_assumption1(&[0.0], &[1.0], &g);
        assert!(!r.lower_bound && !r.passed);
        assert!(r.realness && r.symbol_bound && r.z_regularity && r.tail);
        assert_eq!(r.violation.unwrap().min, 0.0);
    }

    #[test]
    fn report_serializes() {
        let g = LateralGrid::new(2, 32, 8.0).unwrap();
        let m = build_example_medium(ExampleParams {
            symbol: FrequencySymbol::InvTau { eta0: 0.5 },
            chi0: crate::medium::DepthProfile::Linear { a: 1.0, b: 0.5 },
            ..Default::default()
        })
        .unwrap();
        let r = m.validate_assumption1(&[0.0, 0.5], &[-1.0, 1.0], &g);
        assert!(r.lower_bound && r.symbol_bound && r.z_regularity, "{r:?}");
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["tail_checks"].is_array());
    }
}
