//! Many frequencies at once: the `tau` grid, co-moving phases, frequency
//! filters, and the discrete inverse Fourier transform back to time.
//!
//! Frequencies `tau_j = -tau_max + j dtau` (`dtau = 2 tau_max / M`) pair with
//! times `t_m = m dt` (`dt = 2 pi / (M dtau)`) through
//!
//! ```text
//! u(t_m)   = (dtau / 2 pi) sum_j v(tau_j) exp(i tau_j t_m)
//! v(tau_j) = dt sum_m u(t_m) exp(-i tau_j t_m)
//! ```
//!
//! which are exact inverses of each other.

mod solve;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lateral_grid::Field;
use crate::medium::Medium;

pub use solve::{solve_full, SolutionManifest, SourceFn, SpaceTimeSolution, SynthesisOptions};

/// Conjugate-symmetry defects at or below this count as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Trapezoid intervals per unit depth in travel-time quadrature.
pub const DEFAULT_NODES_PER_UNIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    m: usize,
    tau_max: f64,
}

impl TauGrid {
    pub fn new(m: usize, tau_max: f64) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "number of frequencies must be a power of two >= 2, got {m}"
            )));
        }
        if !(tau_max.is_finite() && tau_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau_max must be positive, got {tau_max}"
            )));
        }
        Ok(Self { m, tau_max })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn dtau(&self) -> f64 {
        2.0 * self.tau_max / self.m as f64
    }

    pub fn dt(&self) -> f64 {
        2.0 * PI / (self.m as f64 * self.dtau())
    }

    pub fn tau(&self, j: usize) -> f64 {
        -self.tau_max + j as f64 * self.dtau()
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.tau(j)).collect()
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.m).map(|m| self.time(m)).collect()
    }

    /// Index of `-tau_j`; `tau_0 = -tau_max` is its own partner since
    /// `exp(i tau_max t_m) = exp(-i tau_max t_m)` on the time grid.
    pub fn partner(&self, j: usize) -> usize {
        (self.m - j) % self.m
    }

    /// `exp(i tau_j t_m)`, evaluated from the exact integer phase.
    pub fn phase(&self, j: usize, m: usize) -> Complex64 {
        let n = self.m as i64;
        let k = ((j as i64 - n / 2) * m as i64).rem_euclid(n);
        Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
    }
}

/// One field per sampled frequency, all at the same depth.
#[derive(Clone, Debug)]
pub struct FrequencyBundle {
    taus: TauGrid,
    fields: Vec<Field>,
}

impl FrequencyBundle {
    pub fn new(taus: TauGrid, fields: Vec<Field>) -> Result<Self> {
        if fields.len() != taus.len() {
            return Err(Error::SizeMismatch {
                expected: taus.len(),
                got: fields.len(),
            });
        }
        for f in &fields[1..] {
            f.check_compatible(&fields[0])?;
        }
        let fields = fields
            .into_iter()
            .enumerate()
            .map(|(j, f)| {
                let z = f.z;
                f.with_meta(z, taus.tau(j))
            })
            .collect();
        Ok(Self { taus, fields })
    }

    pub fn from_fn(taus: TauGrid, f: impl Fn(f64) -> Field) -> Result<Self> {
        let fields = taus.taus().into_iter().map(f).collect();
        Self::new(taus, fields)
    }

    pub fn taus(&self) -> &TauGrid {
        &self.taus
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn into_fields(self) -> Vec<Field> {
        self.fields
    }

    /// `max_j |F(-tau_j) - conj F(tau_j)| / max_j |F(tau_j)|`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let scale = self.fields.iter().map(Field::l2_norm).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (j, f) in self.fields.iter().enumerate() {
            let p = &self.fields[self.taus.partner(j)];
            let d: f64 = f
                .values()
                .iter()
                .zip(p.values())
                .map(|(a, b)| (b - a.conj()).norm_sqr())
                .sum::<f64>()
                .sqrt()
                * f.grid().cell_volume().sqrt();
            worst = worst.max(d);
        }
        worst / scale
    }

    pub fn is_conjugate_symmetric(&self) -> bool {
        self.conjugate_symmetry_defect() <= SYMMETRY_TOL
    }
}

/// Time slices `u(t_m)` on a common lateral grid.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub taus: TauGrid,
    pub fields: Vec<Field>,
}

impl TimeSeries {
    pub fn times(&self) -> Vec<f64> {
        self.taus.times()
    }

    /// Largest imaginary part relative to the largest modulus.
    pub fn imaginary_fraction(&self) -> f64 {
        let mut im = 0.0f64;
        let mut all = 0.0f64;
        for f in &self.fields {
            for v in f.values() {
                im = im.max(v.im.abs());
                all = all.max(v.norm());
            }
        }
        if all > 0.0 {
            im / all
        } else {
            0.0
        }
    }

    /// Drops imaginary parts.
    pub fn into_real(self) -> Self {
        let fields = self
            .fields
            .into_iter()
            .map(|f| {
                let v = f
                    .values()
                    .iter()
                    .map(|c| Complex64::new(c.re, 0.0))
                    .collect();
                f.like(v)
            })
            .collect();
        Self { fields, ..self }
    }
}

/// `u(t_m) = (dtau / 2 pi) sum_j v(tau_j) exp(i tau_j t_m)`, summed in index order.
pub fn synthesize(bundle: &FrequencyBundle) -> TimeSeries {
    let taus = bundle.taus;
    let w = taus.dtau() / (2.0 * PI);
    let len = bundle.fields[0].values().len();
    let fields = (0..taus.len())
        .map(|m| {
            let mut acc = vec![Complex64::default(); len];
            for (j, f) in bundle.fields.iter().enumerate() {
                let p = taus.phase(j, m) * w;
                acc.iter_mut()
                    .zip(f.values())
                    .for_each(|(a, v)| *a += p * v);
            }
            let z = bundle.fields[0].z;
            bundle.fields[0].like(acc).with_meta(z, 0.0)
        })
        .collect();
    TimeSeries { taus, fields }
}

/// `v(tau_j) = dt sum_m u(t_m) exp(-i tau_j t_m)`.
pub fn analyze(series: &TimeSeries) -> Result<FrequencyBundle> {
    let taus = series.taus;
    if series.fields.len() != taus.len() {
        return Err(Error::SizeMismatch {
            expected: taus.len(),
            got: series.fields.len(),
        });
    }
    let dt = taus.dt();
    let len = series.fields[0].values().len();
    let fields = (0..taus.len())
        .map(|j| {
            let mut acc = vec![Complex64::default(); len];
            for (m, f) in series.fields.iter().enumerate() {
                let p = taus.phase(j, m).conj() * dt;
                acc.iter_mut()
                    .zip(f.values())
                    .for_each(|(a, v)| *a += p * v);
            }
            series.fields[0].like(acc)
        })
        .collect();
    FrequencyBundle::new(taus, fields)
}

/// A multiplier `chi(tau)` applied to every frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrequencyFilter {
    None,
    /// `exp(-tau² / (2 width²))`.
    Gaussian {
        width: f64,
    },
    /// Indicator of `|tau| <= cutoff`.
    Band {
        cutoff: f64,
    },
}

impl FrequencyFilter {
    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            Self::None => 1.0,
            Self::Gaussian { width } => (-0.5 * (tau / width).powi(2)).exp(),
            Self::Band { cutoff } => {
                if tau.abs() <= cutoff {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::None => true,
            Self::Gaussian { width } => width > 0.0 && width.is_finite(),
            Self::Band { cutoff } => cutoff >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid filter {self:?}")))
        }
    }
}

/// Multiplies the field at each `tau_j` by `chi(tau_j)`.
pub fn apply_frequency_filter(
    bundle: &FrequencyBundle,
    chi: impl Fn(f64) -> f64,
) -> Result<FrequencyBundle> {
    let fields = bundle
        .fields
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let w = chi(bundle.taus.tau(j));
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "filter is not finite at tau = {}",
                    bundle.taus.tau(j)
                )));
            }
            Ok(f.scaled(w.into()))
        })
        .collect::<Result<_>>()?;
    Ok(FrequencyBundle {
        taus: bundle.taus,
        fields,
    })
}

/// Time-domain kernel `chi(t_m) = (dtau / 2 pi) sum_j chi(tau_j) exp(i tau_j t_m)`.
pub fn filter_kernel(taus: &TauGrid, chi: impl Fn(f64) -> f64) -> Vec<Complex64> {
    let w = taus.dtau() / (2.0 * PI);
    (0..taus.len())
        .map(|m| {
            (0..taus.len())
                .map(|j| taus.phase(j, m) * chi(taus.tau(j)) * w)
                .sum()
        })
        .collect()
}

/// Circular convolution `(u * k)(t_m) = dt sum_n u(t_n) k(t_{m - n})`.
pub fn time_convolve(series: &TimeSeries, kernel: &[Complex64]) -> Result<TimeSeries> {
    let m = series.taus.len();
    if kernel.len() != m || series.fields.len() != m {
        return Err(Error::SizeMismatch {
            expected: m,
            got: kernel.len().min(series.fields.len()),
        });
    }
    let dt = series.taus.dt();
    let len = series.fields[0].values().len();
    let fields = (0..m)
        .map(|i| {
            let mut acc = vec![Complex64::default(); len];
            for (n, f) in series.fields.iter().enumerate() {
                let k = kernel[(i + m - n) % m] * dt;
                acc.iter_mut()
                    .zip(f.values())
                    .for_each(|(a, v)| *a += k * v);
            }
            series.fields[0].like(acc)
        })
        .collect();
    Ok(TimeSeries {
        taus: series.taus,
        fields,
    })
}

/// Travel time `T(z, x) = int_0^z dz' / c(z', x, tau)` by the composite
/// trapezoid rule with `max(1, ceil(nodes_per_unit z))` intervals.
pub fn travel_time(
    medium: &Medium,
    z: f64,
    tau: f64,
    grid: &std::sync::Arc<crate::lateral_grid::LateralGrid>,
    nodes_per_unit: usize,
) -> Result<Vec<f64>> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "depth must be >= 0, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(vec![0.0; grid.len()]);
    }
    let intervals = ((nodes_per_unit as f64 * z).ceil() as usize).max(1);
    let h = z / intervals as f64;
    let mut acc = vec![0.0; grid.len()];
    for i in 0..=intervals {
        let w = if i == 0 || i == intervals { 0.5 * h } else { h };
        let c = medium.evaluate_c(i as f64 * h, tau, grid)?;
        acc.iter_mut()
            .zip(c.values())
            .for_each(|(a, c)| *a += w / c.re);
    }
    Ok(acc)
}

/// Co-moving phase change at the field's own `(z, tau)`.
///
/// `direction = -1` maps a wave field `u` to the co-moving field
/// `w = u exp(i tau T)`; `direction = +1` maps `w` back to `u`.
pub fn comoving_transform(u: &Field, medium: &Medium, direction: i32) -> Result<Field> {
    comoving_transform_with(u, medium, direction, DEFAULT_NODES_PER_UNIT)
}

pub fn comoving_transform_with(
    u: &Field,
    medium: &Medium,
    direction: i32,
    nodes_per_unit: usize,
) -> Result<Field> {
    let sign = match direction {
        1 => -1.0,
        -1 => 1.0,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "direction must be +1 or -1, got {direction}"
            )))
        }
    };
    let t = travel_time(medium, u.z, u.tau, u.grid(), nodes_per_unit)?;
    let values = u
        .values()
        .iter()
        .zip(&t)
        .map(|(v, tt)| v * Complex64::from_polar(1.0, sign * u.tau * tt))
        .collect();
    Ok(u.like(values))
}
