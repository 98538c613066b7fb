use serde::{Deserialize, Serialize};

use super::{evolve_with_substeps, EvolutionConfig};
use crate::error::{Error, Result};
use crate::lateral_grid::Field;
use crate::medium::Medium;
use crate::regularity::linear_fit;

/// Differences below this (relative to the initial norm) count as zero.
pub const EXACT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub tau: f64,
    pub n_list: Vec<usize>,
    /// Cayley steps per run; equal across runs so that only the freezing error varies.
    pub total_substeps: usize,
    /// `|U_{n_i} v - U_{n_{i+1}} v|` for consecutive entries.
    pub differences: Vec<f64>,
    pub relative_differences: Vec<f64>,
    /// Fitted order `p` in `difference ~ n^{-p}`; absent when exact or undetermined.
    pub order: Option<f64>,
    pub exact: bool,
    pub monotone: bool,
}

/// Self-convergence of the product formula over `[0, Z]`.
///
/// Every run uses the same total number of Cayley steps,
/// `max(n_list) * cfg.micro_substeps`, split evenly over its macro intervals.
pub fn convergence_study(
    medium: &Medium,
    tau: f64,
    v0: &Field,
    cfg: &EvolutionConfig,
    n_list: &[usize],
) -> Result<ConvergenceReport> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::InvalidArgument(
            "n_list must be strictly increasing with at least two positive entries".into(),
        ));
    }
    let n_max = *n_list.last().unwrap();
    let total = n_max * cfg.micro_substeps;
    if let Some(&bad) = n_list.iter().find(|&&n| total % n != 0) {
        return Err(Error::InvalidArgument(format!(
            "{bad} does not divide the common step count {total}"
        )));
    }
    let mut finals = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let c = EvolutionConfig {
            macro_steps: n,
            ..*cfg
        };
        c.validate()?;
        let (u, _) = evolve_with_substeps(medium, tau, 0.0, c.depth_end, v0, &c, total / n)?;
        finals.push(u);
    }
    let norm0 = v0.l2_norm();
    let differences: Vec<f64> = finals
        .windows(2)
        .map(|w| w[0].sub(&w[1]).map(|d| d.l2_norm()))
        .collect::<Result<_>>()?;
    let relative_differences: Vec<f64> = differences
        .iter()
        .map(|d| if norm0 > 0.0 { d / norm0 } else { *d })
        .collect();
    let exact = relative_differences.iter().all(|&d| d <= EXACT_TOL);
    let order = if exact || differences.len() < 2 || differences.iter().any(|&d| d <= 0.0) {
        None
    } else {
        let lx: Vec<f64> = n_list[..differences.len()]
            .iter()
            .map(|&n| (n as f64).ln())
            .collect();
        let ly: Vec<f64> = differences.iter().map(|d| d.ln()).collect();
        Some(-linear_fit(&lx, &ly).1)
    };
    let monotone = differences.windows(2).all(|w| w[1] <= w[0]);
    Ok(ConvergenceReport {
        tau,
        n_list: n_list.to_vec(),
        total_substeps: total,
        differences,
        relative_differences,
        order,
        exact,
        monotone,
    })
}
