//! Depth evolution by products of frozen-coefficient Cayley steps.
//!
//! The depth interval `[0, Z]` is cut into `n` macro intervals at
//! `z_j = j Z / n`. On each (possibly partial) interval the coefficient is
//! frozen at the left node and the group `exp(i zeta A)` is replaced by
//! `micro_substeps` Cayley steps `(1 - i zeta A / 2)^{-1} (1 + i zeta A / 2)`.

mod convergence;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{FrozenOperator, DEFAULT_SOLVER_TOL};
use crate::lateral_grid::{sobolev_norm, Field};
use crate::medium::Medium;

pub use convergence::{convergence_study, ConvergenceReport};

/// Upper bound on `n * micro_substeps`.
pub const MAX_TOTAL_STEPS: usize = 10_000_000;

/// Tolerance for deciding whether a depth sits on the macro mesh, in units of the step.
pub const ALIGN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    Midpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub depth_end: f64,
    pub macro_steps: usize,
    pub micro_substeps: usize,
    pub quadrature: Quadrature,
    pub solver_tol: f64,
    /// Record `H^2` norms in traces (one extra transform per step).
    pub record_h2: bool,
    /// Krylov iteration cap per resolvent solve.
    pub max_krylov_iter: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            depth_end: 1.0,
            macro_steps: 16,
            micro_substeps: 4,
            quadrature: Quadrature::Midpoint,
            solver_tol: DEFAULT_SOLVER_TOL,
            record_h2: false,
            max_krylov_iter: crate::generator::GmresOptions::default().max_iter,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.depth_end.is_finite() && self.depth_end > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "depth_end must be positive, got {}",
                self.depth_end
            )));
        }
        if self.macro_steps == 0 || self.micro_substeps == 0 {
            return Err(Error::InvalidArgument(
                "step counts must be at least 1".into(),
            ));
        }
        if self.macro_steps.saturating_mul(self.micro_substeps) > MAX_TOTAL_STEPS {
            return Err(Error::InvalidArgument(format!(
                "{} x {} steps exceeds the limit of {MAX_TOTAL_STEPS}",
                self.macro_steps, self.micro_substeps
            )));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance must lie in (0, 1e-6], got {}",
                self.solver_tol
            )));
        }
        Ok(())
    }

    /// Macro step `Z / n`.
    pub fn step(&self) -> f64 {
        self.depth_end / self.macro_steps as f64
    }

    /// Depth of macro node `j`.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.depth_end / self.macro_steps as f64
    }

    /// Index of the node at `z`, if `z` is on the mesh.
    pub fn node_index(&self, z: f64) -> Option<usize> {
        let x = z * self.macro_steps as f64 / self.depth_end;
        let j = x.round();
        ((x - j).abs() <= ALIGN_TOL && j >= 0.0).then_some(j as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub z: f64,
    pub l2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<f64>,
    pub iters: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropagationTrace {
    pub steps: Vec<StepRecord>,
}

impl PropagationTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iters).sum()
    }

    fn record(&mut self, v: &Field, iters: usize, h2: bool) -> Result<()> {
        self.steps.push(StepRecord {
            z: v.z,
            l2: v.l2_norm(),
            h2: if h2 {
                Some(sobolev_norm(v, 2.0)?)
            } else {
                None
            },
            iters,
        });
        Ok(())
    }
}

/// One Cayley step `(1 - i zeta A/2)^{-1} (1 + i zeta A/2) v`, computed as
/// `2 lambda R(lambda) v - v` with `lambda = 2 / zeta`. Negative `zeta` steps backwards.
pub fn frozen_step(op: &FrozenOperator, zeta: f64, v: &Field, tol: f64) -> Result<(Field, usize)> {
    if !zeta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step must be finite, got {zeta}"
        )));
    }
    if zeta == 0.0 {
        return Ok((v.clone(), 0));
    }
    let lambda = 2.0 / zeta;
    let (u, stats) = op.resolvent_with_stats(lambda, v, tol)?;
    let mut w = u.scaled((2.0 * lambda).into());
    w.axpy((-1.0).into(), v)?;
    w.z = v.z;
    w.tau = v.tau;
    Ok((w, stats.iterations))
}

/// `steps` equal Cayley steps over a depth `length` with one frozen operator.
fn frozen_segment(
    op: &FrozenOperator,
    length: f64,
    steps: usize,
    v: &Field,
    tol: f64,
) -> Result<(Field, usize)> {
    let zeta = length / steps as f64;
    let mut cur = v.clone();
    let mut iters = 0;
    for _ in 0..steps {
        let (next, it) = frozen_step(op, zeta, &cur, tol)?;
        cur = next;
        iters += it;
    }
    Ok((cur, iters))
}

fn check_range(cfg: &EvolutionConfig, z_from: f64, z_to: f64) -> Result<()> {
    let slack = ALIGN_TOL * cfg.step();
    if !(z_from >= 0.0 && z_from <= z_to && z_to <= cfg.depth_end + slack) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= z_from <= z_to <= {}, got [{z_from}, {z_to}]",
            cfg.depth_end
        )));
    }
    Ok(())
}

/// Approximates `U(tau; z_to, z_from) v` by the frozen-coefficient product.
pub fn evolve(
    medium: &Medium,
    tau: f64,
    z_from: f64,
    z_to: f64,
    v: &Field,
    cfg: &EvolutionConfig,
) -> Result<(Field, PropagationTrace)> {
    cfg.validate()?;
    check_range(cfg, z_from, z_to)?;
    evolve_with_substeps(medium, tau, z_from, z_to, v, cfg, cfg.micro_substeps)
}

pub(crate) fn evolve_with_substeps(
    medium: &Medium,
    tau: f64,
    z_from: f64,
    z_to: f64,
    v: &Field,
    cfg: &EvolutionConfig,
    substeps: usize,
) -> Result<(Field, PropagationTrace)> {
    let grid = v.grid().clone();
    let n = cfg.macro_steps as f64;
    let zmax = cfg.depth_end;
    let mut trace = PropagationTrace::default();
    let mut cur = v.clone();
    cur.z = z_from;
    cur.tau = tau;
    let mut a = z_from;
    while z_to - a > ALIGN_TOL * cfg.step() {
        let left = (a * n / zmax + ALIGN_TOL).floor() as usize;
        let b = cfg.node(left + 1).min(z_to);
        let op = FrozenOperator::new(medium, cfg.node(left), tau, &grid)?.with_krylov_limits(
            crate::generator::GmresOptions::default().restart,
            cfg.max_krylov_iter,
        );
        let (next, iters) = frozen_segment(&op, b - a, substeps, &cur, cfg.solver_tol)?;
        cur = next;
        cur.z = b;
        trace.record(&cur, iters, cfg.record_h2)?;
        a = b;
    }
    Ok((cur, trace))
}

/// Duhamel solution `v(z) = U(z, 0) v0 + int_0^z U(z, rho) g(rho) d rho`, sampled at
/// every macro node. The integral uses the midpoint rule on each macro interval,
/// with the source transported from the midpoint.
pub fn mild_solve(
    medium: &Medium,
    tau: f64,
    v0: &Field,
    source: Option<&(dyn Fn(f64) -> Field + Sync)>,
    cfg: &EvolutionConfig,
) -> Result<(Vec<Field>, PropagationTrace)> {
    cfg.validate()?;
    let Quadrature::Midpoint = cfg.quadrature;
    let h = cfg.step();
    let mut traj = Vec::with_capacity(cfg.macro_steps + 1);
    let mut trace = PropagationTrace::default();
    let mut cur = v0.clone();
    cur.z = 0.0;
    cur.tau = tau;
    traj.push(cur.clone());
    for k in 0..cfg.macro_steps {
        let (z0, z1) = (cfg.node(k), cfg.node(k + 1));
        let (mut next, t) =
            evolve_with_substeps(medium, tau, z0, z1, &cur, cfg, cfg.micro_substeps)?;
        let mut iters = t.total_iterations();
        if let Some(g) = source {
            let mid = 0.5 * (z0 + z1);
            let gm = g(mid);
            gm.check_compatible(v0)?;
            if gm.max_abs() > 0.0 {
                let (moved, t) =
                    evolve_with_substeps(medium, tau, mid, z1, &gm, cfg, cfg.micro_substeps)?;
                iters += t.total_iterations();
                next.axpy(h.into(), &moved)?;
            }
        }
        next.z = z1;
        trace.record(&next, iters, cfg.record_h2)?;
        traj.push(next.clone());
        cur = next;
    }
    Ok((traj, trace))
}

/// `|U(z1, z2) U(z2, z3) v - U(z1, z3) v| / |v|` for `z1 >= z2 >= z3`;
/// `z2` must be a macro node.
pub fn check_evolution_property(
    medium: &Medium,
    tau: f64,
    z1: f64,
    z2: f64,
    z3: f64,
    v: &Field,
    cfg: &EvolutionConfig,
) -> Result<f64> {
    cfg.validate()?;
    if !(z1 >= z2 && z2 >= z3) {
        return Err(Error::InvalidArgument(format!(
            "need z1 >= z2 >= z3, got {z1}, {z2}, {z3}"
        )));
    }
    if cfg.node_index(z2).is_none() {
        return Err(Error::Misaligned {
            z: z2,
            step: cfg.step(),
        });
    }
    let (mid, _) = evolve(medium, tau, z3, z2, v, cfg)?;
    let (two, _) = evolve(medium, tau, z2, z1, &mid, cfg)?;
    let (one, _) = evolve(medium, tau, z3, z1, v, cfg)?;
    let norm = v.l2_norm();
    let d = two.sub(&one)?.l2_norm();
    Ok(if norm > 0.0 { d / norm } else { d })
}
