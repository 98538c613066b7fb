//! The frozen operator `A v = div(c grad v)` at fixed `(z, tau)`, its
//! resolvent, and exponent bookkeeping for elliptic regularity.

pub mod dense;
pub mod krylov;
mod ledger;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lateral_grid::{sobolev_norm, Field, LateralGrid};
use crate::medium::Medium;

pub use krylov::{gmres, GmresOptions, GmresOutcome};
pub use ledger::{
    bootstrap_ledger, bootstrap_ledger_f64, parse_rational, product_exponent, BootstrapLedger,
    Rational,
};

/// Default relative tolerance of resolvent solves.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveStats {
    pub iterations: usize,
}

/// `A(tau; z)` with the coefficient and its gradient sampled once.
#[derive(Clone, Debug)]
pub struct FrozenOperator {
    grid: Arc<LateralGrid>,
    z: f64,
    tau: f64,
    c0: f64,
    c: Vec<f64>,
    grad_c: Vec<Vec<f64>>,
    c_mean: f64,
    restart: usize,
    max_iter: usize,
}

impl FrozenOperator {
    pub fn new(medium: &Medium, z: f64, tau: f64, grid: &Arc<LateralGrid>) -> Result<Self> {
        let c = medium.evaluate_c(z, tau, grid)?.real_parts();
        let grad_c = medium
            .evaluate_grad_c(z, tau, grid)?
            .iter()
            .map(Field::real_parts)
            .collect();
        Ok(Self::assemble(grid, z, tau, medium.c0(), c, grad_c))
    }

    /// An operator from raw coefficient samples; `c0` is taken as their minimum.
    /// The gradient is obtained spectrally.
    pub fn from_samples(grid: &Arc<LateralGrid>, c: Vec<f64>) -> Result<Self> {
        grid.check_len(c.len())?;
        let c0 = c.iter().copied().fold(f64::INFINITY, f64::min);
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::InvalidMedium(format!(
                "coefficient minimum {c0} is not positive"
            )));
        }
        let f = Field::from_real(grid, &c)?;
        let grad_c = (0..grid.dim())
            .map(|a| Ok(crate::lateral_grid::spectral_derivative(&f, a)?.real_parts()))
            .collect::<Result<_>>()?;
        Ok(Self::assemble(grid, 0.0, 0.0, c0, c, grad_c))
    }

    fn assemble(
        grid: &Arc<LateralGrid>,
        z: f64,
        tau: f64,
        c0: f64,
        c: Vec<f64>,
        grad_c: Vec<Vec<f64>>,
    ) -> Self {
        let c_mean = c.iter().sum::<f64>() / c.len() as f64;
        let defaults = GmresOptions::default();
        Self {
            grid: grid.clone(),
            z,
            tau,
            c0,
            c,
            grad_c,
            c_mean,
            restart: defaults.restart,
            max_iter: defaults.max_iter,
        }
    }

    /// Overrides the Krylov restart length and iteration cap.
    pub fn with_krylov_limits(mut self, restart: usize, max_iter: usize) -> Self {
        self.restart = restart.max(1);
        self.max_iter = max_iter.max(1);
        self
    }

    pub fn grid(&self) -> &Arc<LateralGrid> {
        &self.grid
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn coefficient(&self) -> &[f64] {
        &self.c
    }

    pub fn coefficient_gradient(&self) -> &[Vec<f64>] {
        &self.grad_c
    }

    pub fn coefficient_mean(&self) -> f64 {
        self.c_mean
    }

    /// `A` applied to Fourier coefficients: `sum_j (i xi_j) F[c F^{-1}[(i xi_j) u]]`.
    fn apply_spectral(&self, u: &[Complex64], out: &mut [Complex64], tmp: &mut [Complex64]) {
        let g = &self.grid;
        out.iter_mut().for_each(|v| *v = Complex64::default());
        for axis in 0..g.dim() {
            for (k, (t, x)) in tmp.iter_mut().zip(u).enumerate() {
                *t = x * Complex64::new(0.0, g.derivative_symbol(k, axis));
            }
            g.inverse_in_place(tmp);
            tmp.iter_mut().zip(&self.c).for_each(|(t, c)| *t *= c);
            g.forward_in_place(tmp);
            for (k, (o, t)) in out.iter_mut().zip(tmp.iter()).enumerate() {
                *o += t * Complex64::new(0.0, g.derivative_symbol(k, axis));
            }
        }
    }

    fn check(&self, v: &Field) -> Result<()> {
        v.check_on(&self.grid)
    }

    /// Divergence form `div(c grad v)`.
    pub fn apply(&self, v: &Field) -> Result<Field> {
        self.check(v)?;
        let mut u = v.values().to_vec();
        self.grid.forward_in_place(&mut u);
        let mut out = vec![Complex64::default(); u.len()];
        let mut tmp = vec![Complex64::default(); u.len()];
        self.apply_spectral(&u, &mut out, &mut tmp);
        self.grid.inverse_in_place(&mut out);
        Ok(v.like(out))
    }

    /// Non-divergence form `grad c . grad v + c lap v`.
    pub fn apply_nondivergence(&self, v: &Field) -> Result<Field> {
        self.check(v)?;
        let g = &self.grid;
        let mut vhat = v.values().to_vec();
        g.forward_in_place(&mut vhat);
        let mut out = vec![Complex64::default(); vhat.len()];
        for axis in 0..g.dim() {
            let mut d: Vec<Complex64> = vhat
                .iter()
                .enumerate()
                .map(|(k, x)| x * Complex64::new(0.0, g.derivative_symbol(k, axis)))
                .collect();
            g.inverse_in_place(&mut d);
            for ((o, di), gc) in out.iter_mut().zip(&d).zip(&self.grad_c[axis]) {
                *o += di * gc;
            }
        }
        let mut lap: Vec<Complex64> = vhat
            .iter()
            .enumerate()
            .map(|(k, x)| -x * g.laplacian_symbol(k))
            .collect();
        g.inverse_in_place(&mut lap);
        for ((o, l), c) in out.iter_mut().zip(&lap).zip(&self.c) {
            *o += l * c;
        }
        Ok(v.like(out))
    }

    /// `|<Av, w> - <v, Aw>| / (|v|_{H^1} |w|_{H^1})`.
    pub fn symmetry_defect(&self, v: &Field, w: &Field) -> Result<f64> {
        let av = self.apply(v)?;
        let aw = self.apply(w)?;
        let diff = av.inner(w)? - v.inner(&aw)?;
        let denom = sobolev_norm(v, 1.0)? * sobolev_norm(w, 1.0)?;
        Ok(if denom > 0.0 {
            diff.norm() / denom
        } else {
            diff.norm()
        })
    }

    /// The quadratic form `<-Av, v>`.
    pub fn energy(&self, v: &Field) -> Result<Complex64> {
        Ok(-self.apply(v)?.inner(v)?)
    }

    /// Solves `(lambda - iA) u = f` to relative residual `tol`.
    pub fn resolvent(&self, lambda: f64, f: &Field, tol: f64) -> Result<Field> {
        Ok(self.resolvent_with_stats(lambda, f, tol)?.0)
    }

    pub fn resolvent_with_stats(
        &self,
        lambda: f64,
        f: &Field,
        tol: f64,
    ) -> Result<(Field, SolveStats)> {
        self.check(f)?;
        if !(lambda.is_finite() && lambda != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "resolvent parameter must be nonzero, got {lambda}"
            )));
        }
        if !(tol > 0.0 && tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance must lie in (0, 1e-6], got {tol}"
            )));
        }
        let g = &self.grid;
        let mut b = f.values().to_vec();
        g.forward_in_place(&mut b);
        let diag: Vec<Complex64> = (0..g.len())
            .map(|k| Complex64::new(lambda, self.c_mean * g.laplacian_symbol(k)))
            .collect();
        let tmp = std::cell::RefCell::new(vec![Complex64::default(); g.len()]);
        let apply = |u: &[Complex64], out: &mut [Complex64]| {
            self.apply_spectral(u, out, &mut tmp.borrow_mut());
            for (o, x) in out.iter_mut().zip(u) {
                *o = lambda * x - Complex64::i() * *o;
            }
        };
        let precond = |v: &mut [Complex64]| v.iter_mut().zip(&diag).for_each(|(x, d)| *x /= d);
        let opts = GmresOptions {
            tol,
            restart: self.restart,
            max_iter: self.max_iter,
        };
        let out = gmres(apply, precond, &b, opts);
        if !out.converged {
            return Err(Error::NoConvergence {
                iterations: out.iterations,
                residual: out.residual,
            });
        }
        let mut u = out.x;
        g.inverse_in_place(&mut u);
        Ok((
            f.like(u),
            SolveStats {
                iterations: out.iterations,
            },
        ))
    }
}
