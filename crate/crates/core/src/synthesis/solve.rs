use rayon::prelude::*;
use serde::Serialize;

use super::{synthesize, FrequencyBundle, FrequencyFilter, TauGrid, TimeSeries};
use crate::error::{Error, Result};
use crate::lateral_grid::Field;
use crate::medium::Medium;
use crate::propagator::{mild_solve, EvolutionConfig, PropagationTrace};

/// Source term `g(z, tau)`.
pub type SourceFn<'a> = dyn Fn(f64, f64) -> Field + Sync + 'a;

#[derive(Clone, Debug)]
pub struct SynthesisOptions {
    /// Worker threads for the per-frequency solves.
    pub workers: usize,
    /// Output depths; each must be a macro node of the evolution mesh.
    pub z_values: Vec<f64>,
    pub filter: FrequencyFilter,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            z_values: Vec::new(),
            filter: FrequencyFilter::None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpaceTimeSolution {
    pub taus: TauGrid,
    pub z_values: Vec<f64>,
    /// Frequency fields at each output depth, after filtering.
    pub bundles: Vec<FrequencyBundle>,
    /// Time slices at each output depth.
    pub series: Vec<TimeSeries>,
    pub symmetry_defects: Vec<f64>,
    /// Whether the slices at each depth were reduced to real values.
    pub real: Vec<bool>,
    /// One trace per frequency.
    pub traces: Vec<PropagationTrace>,
    pub filter: FrequencyFilter,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionManifest {
    pub z_values: Vec<f64>,
    pub t_values: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub filter: FrequencyFilter,
    pub symmetry_defects: Vec<f64>,
    pub real: Vec<bool>,
}

impl SpaceTimeSolution {
    pub fn manifest(&self) -> SolutionManifest {
        SolutionManifest {
            z_values: self.z_values.clone(),
            t_values: self.taus.times(),
            tau_grid: self.taus.taus(),
            filter: self.filter,
            symmetry_defects: self.symmetry_defects.clone(),
            real: self.real.clone(),
        }
    }
}

/// Solves every frequency of `v0` to the requested depths and synthesizes
/// the time slices there.
///
/// Frequencies are solved independently on a pool of `opts.workers` threads;
/// the result does not depend on the worker count. If any frequency fails,
/// the error lists every failed `tau`.
pub fn solve_full(
    medium: &Medium,
    v0: &FrequencyBundle,
    source: Option<&SourceFn<'_>>,
    cfg: &EvolutionConfig,
    opts: &SynthesisOptions,
) -> Result<SpaceTimeSolution> {
    cfg.validate()?;
    opts.filter.validate()?;
    let z_values = if opts.z_values.is_empty() {
        vec![cfg.depth_end]
    } else {
        opts.z_values.clone()
    };
    let nodes = z_values
        .iter()
        .map(|&z| {
            cfg.node_index(z)
                .filter(|&j| j <= cfg.macro_steps)
                .ok_or(Error::Misaligned {
                    z,
                    step: cfg.step(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let taus = *v0.taus();
    let results: Vec<Result<(Vec<Field>, PropagationTrace)>> = pool.install(|| {
        v0.fields()
            .par_iter()
            .enumerate()
            .map(|(j, f)| {
                let tau = taus.tau(j);
                let g = source.map(|s| move |z: f64| s(z, tau));
                let g_ref = g.as_ref().map(|g| g as &(dyn Fn(f64) -> Field + Sync));
                let (traj, trace) = mild_solve(medium, tau, f, g_ref, cfg)?;
                Ok((nodes.iter().map(|&k| traj[k].clone()).collect(), trace))
            })
            .collect()
    });
    let mut failures = Vec::new();
    let mut per_tau = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    for (j, r) in results.into_iter().enumerate() {
        match r {
            Ok((fields, trace)) => {
                per_tau.push(fields);
                traces.push(trace);
            }
            Err(e) => failures.push((taus.tau(j), e.to_string())),
        }
    }
    if !failures.is_empty() {
        return Err(Error::PartialFailure { failures });
    }
    let mut bundles = Vec::with_capacity(z_values.len());
    let mut series = Vec::with_capacity(z_values.len());
    let mut symmetry_defects = Vec::with_capacity(z_values.len());
    let mut real = Vec::with_capacity(z_values.len());
    for i in 0..z_values.len() {
        let fields = per_tau.iter().map(|f| f[i].clone()).collect();
        let b = super::apply_frequency_filter(&FrequencyBundle::new(taus, fields)?, |t| {
            opts.filter.eval(t)
        })?;
        let defect = b.conjugate_symmetry_defect();
        let is_real = defect <= super::SYMMETRY_TOL;
        let s = synthesize(&b);
        series.push(if is_real { s.into_real() } else { s });
        symmetry_defects.push(defect);
        real.push(is_real);
        bundles.push(b);
    }
    Ok(SpaceTimeSolution {
        taus,
        z_values,
        bundles,
        series,
        symmetry_defects,
        real,
        traces,
        filter: opts.filter,
    })
}
