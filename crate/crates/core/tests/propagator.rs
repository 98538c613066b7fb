mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use pxe_core::generator::FrozenOperator;
use pxe_core::medium::{build_example_medium, ExampleParams, FrequencySymbol, Medium};
use pxe_core::propagator::{convergence_study, evolve, frozen_step, mild_solve, EvolutionConfig};
use pxe_core::Field;

const TOL: f64 = 1e-12;

fn cfg(z: f64, n: usize, substeps: usize) -> EvolutionConfig {
    EvolutionConfig {
        depth_end: z,
        macro_steps: n,
        micro_substeps: substeps,
        solver_tol: TOL,
        ..Default::default()
    }
}

/// Cayley multiplier of one step `zeta` on an eigenvector with eigenvalue `mu` of `A`.
fn cayley(mu: f64, zeta: f64) -> Complex64 {
    let a = Complex64::new(0.0, 0.5 * zeta * mu);
    (1.0 + a) / (1.0 - a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn backward_step_inverts_forward_step(seed in 0u64..1000, zeta in 0.01f64..0.5, tau in -2.0f64..2.0) {
        let g = grid(16);
        let op = FrozenOperator::new(&example(0.5, 0.0), 0.0, tau, &g).unwrap();
        let v = white(&g, seed);
        let (w, _) = frozen_step(&op, zeta, &v, TOL).unwrap();
        let (back, _) = frozen_step(&op, -zeta, &w, TOL).unwrap();
        prop_assert!(back.sub(&v).unwrap().l2_norm() <= 1e-9);
        prop_assert!((w.l2_norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn evolution_is_contractive(seed in 0u64..1000, tau in -4.0f64..4.0) {
        let g = grid(32);
        let m = depth_dependent_example();
        let v = band_limited(&g, 8, seed);
        let (u, trace) = evolve(&m, tau, 0.0, 1.0, &v, &cfg(1.0, 4, 2)).unwrap();
        prop_assert!(u.l2_norm() <= v.l2_norm() * (1.0 + 1e-9));
        prop_assert_eq!(trace.len(), 4);
    }
}

#[test]
fn plane_wave_with_source_follows_the_discrete_scheme() {
    let g = grid(32);
    let c0 = 1.7;
    let m = Medium::constant(c0).unwrap();
    let k = [2, -1];
    let xi2 = (2.0 * std::f64::consts::PI / L).powi(2) * 5.0;
    let mu = -c0 * xi2;
    let e = Field::plane_wave(&g, k);
    let amp = Complex64::new(0.3, -0.2);
    let src = {
        let e = e.clone();
        move |_z: f64| e.scaled(amp)
    };
    let (z, n, s) = (1.0, 16, 4);
    let (traj, _) = mild_solve(&m, 0.7, &e, Some(&src), &cfg(z, n, s)).unwrap();

    let h = z / n as f64;
    let full = cayley(mu, h / s as f64).powi(s as i32);
    let half = cayley(mu, 0.5 * h / s as f64).powi(s as i32);
    let mut c = Complex64::new(1.0, 0.0);
    for (j, f) in traj.iter().enumerate() {
        assert!(f.sub(&e.scaled(c)).unwrap().l2_norm() <= 1e-9, "node {j}");
        c = full * c + h * half * amp;
    }

    // The scheme converges to the exact solution of v' = i mu v + amp at second order.
    let zi = Complex64::new(0.0, mu * z);
    let exact = zi.exp() + (zi.exp() - 1.0) / Complex64::new(0.0, mu) * amp;
    let err = |n: usize| {
        let (traj, _) = mild_solve(&m, 0.7, &e, Some(&src), &cfg(z, n, s)).unwrap();
        (traj.last().unwrap().values()[0] / e.values()[0] - exact).norm()
    };
    let (e16, e32) = (err(16), err(32));
    assert!(e16 <= 1e-2 && e16 / e32 > 3.5, "{e16} {e32}");
}

#[test]
fn zero_data_and_zero_source_stay_zero() {
    let g = grid(16);
    let zero = Field::zeros(&g);
    let src = |_z: f64| Field::zeros(&g);
    let (traj, _) =
        mild_solve(&example(0.5, 0.0), 1.0, &zero, Some(&src), &cfg(0.5, 4, 2)).unwrap();
    assert_eq!(traj.len(), 5);
    assert!(traj.iter().all(|f| f.max_abs() == 0.0));
}

#[test]
fn tau_sweep_is_continuous_where_the_symbol_joins() {
    let g = grid(32);
    let m = build_example_medium(ExampleParams {
        symbol: FrequencySymbol::InvTau { eta0: 0.5 },
        ..Default::default()
    })
    .unwrap();
    let v = band_limited(&g, 6, 3);
    let c = cfg(0.5, 4, 2);
    let at = |tau: f64| evolve(&m, tau, 0.0, 0.5, &v, &c).unwrap().0;
    let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&d| at(0.5 - d).sub(&at(0.5 + d)).unwrap().l2_norm())
        .collect();
    assert!(gaps[0] > 0.0);
    assert!(
        gaps[1] < 0.2 * gaps[0] && gaps[2] < 0.2 * gaps[1],
        "{gaps:?}"
    );
}

#[test]
fn depth_independent_media_converge_exactly() {
    let g = grid(32);
    let v = band_limited(&g, 6, 1);
    let rep = convergence_study(
        &example(0.5, 0.0),
        1.0,
        &v,
        &cfg(1.0, 16, 2),
        &[2, 4, 8, 16],
    )
    .unwrap();
    assert!(rep.exact, "{rep:?}");
    assert!(rep.order.is_none());
    let rep = convergence_study(
        &depth_dependent_example(),
        1.0,
        &v,
        &cfg(1.0, 16, 2),
        &[2, 4, 8, 16],
    )
    .unwrap();
    assert!(!rep.exact);
    assert!(rep.monotone, "{rep:?}");
}

#[test]
fn configuration_errors_are_reported() {
    let g = grid(16);
    let v = white(&g, 0);
    let m = example(0.5, 0.0);
    assert!(evolve(&m, 0.0, 0.5, 0.2, &v, &cfg(1.0, 4, 1)).is_err());
    assert!(evolve(&m, 0.0, 0.0, 2.0, &v, &cfg(1.0, 4, 1)).is_err());
    assert!(evolve(&m, 0.0, 0.0, 1.0, &v, &cfg(1.0, 0, 1)).is_err());
    assert!(convergence_study(&m, 0.0, &v, &cfg(1.0, 4, 1), &[4, 2]).is_err());
}
