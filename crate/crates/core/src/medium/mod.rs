//! The coefficient `c(z, x, tau) = c0 + sum_l c_l(z, x) h_l(tau)`.

mod coefficient;
pub mod spec;
mod symbol;
mod validate;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lateral_grid::{spectral_derivative, Field, LateralGrid};

pub use coefficient::{
    CoefficientField, ConstantCoefficient, DepthProfile, ExampleCoefficient, ExprCoefficient,
    FnCoefficient,
};
pub use symbol::{FrequencySymbol, NEAR_ZERO};
pub use validate::{DzCheck, LowerBoundSample, SymbolCheck, TailCheck, ValidationReport};

/// Slack allowed below `c0` when checking the lower bound.
pub const LOWER_BOUND_SLACK: f64 = 1e-12;

/// Default depth step for difference quotients in `z`.
pub const DEFAULT_DZ_STEP: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct MediumTerm {
    pub coefficient: Arc<dyn CoefficientField>,
    pub symbol: FrequencySymbol,
}

/// How lateral gradients of the coefficient are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientRoute {
    /// Analytic where the term provides it, spectral otherwise.
    Auto,
    /// Always differentiate the sampled field spectrally.
    Spectral,
}

#[derive(Clone, Debug)]
pub struct Medium {
    c0: f64,
    terms: Vec<MediumTerm>,
    r: f64,
    dz_step: f64,
}

impl Medium {
    /// Constant medium `c = c0` with no perturbation terms.
    pub fn constant(c0: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::InvalidMedium(format!(
                "c0 must be positive, got {c0}"
            )));
        }
        Ok(Self {
            c0,
            terms: Vec::new(),
            r: 0.5,
            dz_step: DEFAULT_DZ_STEP,
        })
    }

    /// Appends a term. The declared regularity drops to the term's own if lower.
    pub fn with_term(
        mut self,
        coefficient: Arc<dyn CoefficientField>,
        symbol: FrequencySymbol,
    ) -> Self {
        if let Some(r) = coefficient.declared_regularity() {
            if self
                .terms
                .iter()
                .all(|t| t.coefficient.declared_regularity().is_none())
            {
                self.r = r;
            } else {
                self.r = self.r.min(r);
            }
        }
        self.terms.push(MediumTerm {
            coefficient,
            symbol,
        });
        self
    }

    pub fn with_regularity(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidMedium(format!(
                "declared r must lie in (0, 1), got {r}"
            )));
        }
        self.r = r;
        Ok(self)
    }

    pub fn with_dz_step(mut self, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidMedium(format!(
                "depth step must be positive, got {step}"
            )));
        }
        self.dz_step = step;
        Ok(self)
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn terms(&self) -> &[MediumTerm] {
        &self.terms
    }

    /// Declared coefficient regularity `r`.
    pub fn regularity(&self) -> f64 {
        self.r
    }

    pub fn dz_step(&self) -> f64 {
        self.dz_step
    }

    pub fn is_z_independent(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient.is_z_independent())
    }

    /// Samples of `c_l(z, .)` for term `l`.
    pub fn term_values(&self, l: usize, z: f64, grid: &LateralGrid) -> Vec<f64> {
        let c = &self.terms[l].coefficient;
        grid.points().map(|x| c.sample(z, x)).collect()
    }

    /// Depth derivative of term `l`: analytic when available, else a
    /// centered difference (one-sided near `z = 0`).
    pub fn term_dz(&self, l: usize, z: f64, grid: &LateralGrid) -> Vec<f64> {
        let c = &self.terms[l].coefficient;
        if c.has_analytic_dz() {
            return grid.points().map(|x| c.dz(z, x).unwrap_or(0.0)).collect();
        }
        let h = self.dz_step;
        let (lo, hi) = if z >= h { (z - h, z + h) } else { (z, z + h) };
        grid.points()
            .map(|x| (c.sample(hi, x) - c.sample(lo, x)) / (hi - lo))
            .collect()
    }

    /// Raw samples of `c`, without the lower-bound check.
    pub fn sample_c(&self, z: f64, tau: f64, grid: &LateralGrid) -> Vec<f64> {
        let mut out = vec![self.c0; grid.len()];
        for term in &self.terms {
            let h = term.symbol.eval(tau);
            for (o, x) in out.iter_mut().zip(grid.points()) {
                *o += h * term.coefficient.sample(z, x);
            }
        }
        out
    }

    /// Samples `c(z, ., tau)` and checks `c >= c0`.
    pub fn evaluate_c(&self, z: f64, tau: f64, grid: &Arc<LateralGrid>) -> Result<Field> {
        self.check_depth(z)?;
        self.check_support(grid)?;
        let values = self.sample_c(z, tau, grid);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if min.is_nan()
            || values.iter().any(|v| !v.is_finite())
            || min < self.c0 - LOWER_BOUND_SLACK
        {
            return Err(Error::LowerBound {
                z,
                tau,
                min,
                c0: self.c0,
            });
        }
        Ok(Field::from_real(grid, &values)?.with_meta(z, tau))
    }

    pub fn evaluate_grad_c(&self, z: f64, tau: f64, grid: &Arc<LateralGrid>) -> Result<Vec<Field>> {
        self.evaluate_grad_c_with(z, tau, grid, GradientRoute::Auto)
    }

    /// Lateral gradient of `c`, one field per axis.
    pub fn evaluate_grad_c_with(
        &self,
        z: f64,
        tau: f64,
        grid: &Arc<LateralGrid>,
        route: GradientRoute,
    ) -> Result<Vec<Field>> {
        self.check_depth(z)?;
        let d = grid.dim();
        let mut out = vec![vec![0.0; grid.len()]; d];
        for (l, term) in self.terms.iter().enumerate() {
            let h = term.symbol.eval(tau);
            let c = &term.coefficient;
            if route == GradientRoute::Auto && c.has_analytic_gradient() {
                for (i, x) in grid.points().enumerate() {
                    let g = c.gradient(z, x).unwrap_or([0.0, 0.0]);
                    for (axis, o) in out.iter_mut().enumerate() {
                        o[i] += h * g[axis];
                    }
                }
            } else {
                let f = Field::from_real(grid, &self.term_values(l, z, grid))?;
                for (axis, o) in out.iter_mut().enumerate() {
                    let df = spectral_derivative(&f, axis)?;
                    for (oi, v) in o.iter_mut().zip(df.values()) {
                        *oi += h * v.re;
                    }
                }
            }
        }
        out.iter()
            .map(|v| Ok(Field::from_real(grid, v)?.with_meta(z, tau)))
            .collect()
    }

    /// `1/c(z, ., tau) - 1/c0`.
    pub fn reciprocal_deviation(&self, z: f64, tau: f64, grid: &Arc<LateralGrid>) -> Result<Field> {
        let c = self.evaluate_c(z, tau, grid)?;
        let inv0 = 1.0 / self.c0;
        Ok(c.like(
            c.values()
                .iter()
                .map(|v| Complex64::new(1.0 / v.re - inv0, 0.0))
                .collect(),
        ))
    }

    pub fn validate_assumption1(
        &self,
        z_samples: &[f64],
        tau_samples: &[f64],
        grid: &Arc<LateralGrid>,
    ) -> ValidationReport {
        validate::validate(self, z_samples, tau_samples, grid)
    }

    fn check_depth(&self, z: f64) -> Result<()> {
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "depth must be >= 0, got {z}"
            )));
        }
        Ok(())
    }

    /// Compactly supported terms must fit strictly inside the torus.
    pub fn check_support(&self, grid: &LateralGrid) -> Result<()> {
        for term in &self.terms {
            if let Some(rad) = term.coefficient.support_radius() {
                if rad >= 0.5 * grid.length() {
                    return Err(Error::InvalidMedium(format!(
                        "coefficient support radius {rad} does not fit in a torus of side {}",
                        grid.length()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parameters of the rough benchmark medium `c0 + chi0(z) B(|x|) |x|^{alpha(z)} h(tau)`.
#[derive(Clone, Debug)]
pub struct ExampleParams {
    pub c0: f64,
    pub chi0: DepthProfile,
    pub alpha: DepthProfile,
    pub r1: f64,
    pub r2: f64,
    /// `|x|` is replaced by `(|x|² + eps²)^{1/2}`.
    pub regularize_eps: f64,
    pub symbol: FrequencySymbol,
    /// Defaults to `0.9 alpha0`, capped below 1.
    pub declared_r: Option<f64>,
    /// Depth range over which `alpha0 = min alpha` and `chi0 >= 0` are checked.
    pub depth: f64,
}

impl Default for ExampleParams {
    fn default() -> Self {
        Self {
            c0: 1.0,
            chi0: DepthProfile::Constant(1.0),
            alpha: DepthProfile::Constant(0.5),
            r1: 1.0,
            r2: 3.0,
            regularize_eps: 0.0,
            symbol: FrequencySymbol::One,
            declared_r: None,
            depth: 1.0,
        }
    }
}

pub fn build_example_medium(p: ExampleParams) -> Result<Medium> {
    if !(p.r1 > 0.0 && p.r1 < p.r2 && p.r2.is_finite()) {
        return Err(Error::InvalidMedium(format!(
            "radii must satisfy 0 < r1 < r2, got r1 = {}, r2 = {}",
            p.r1, p.r2
        )));
    }
    if !(p.regularize_eps >= 0.0 && p.regularize_eps.is_finite()) {
        return Err(Error::InvalidMedium(format!(
            "regularization must be >= 0, got {}",
            p.regularize_eps
        )));
    }
    let alpha0 = p.alpha.min_on(p.depth);
    if !(alpha0 > 0.0) {
        return Err(Error::InvalidMedium(format!(
            "alpha must stay positive, min is {alpha0}"
        )));
    }
    let chi_min = p.chi0.min_on(p.depth);
    if chi_min < 0.0 {
        return Err(Error::InvalidMedium(format!(
            "chi0 must be >= 0, min is {chi_min}"
        )));
    }
    let declared_r = p.declared_r.unwrap_or((0.9 * alpha0).min(0.95));
    let coefficient = ExampleCoefficient {
        chi0: p.chi0,
        alpha: p.alpha,
        r1: p.r1,
        r2: p.r2,
        eps: p.regularize_eps,
        declared_r,
    };
    Medium::constant(p.c0)?
        .with_term(Arc::new(coefficient), p.symbol)
        .with_regularity(declared_r)
}
