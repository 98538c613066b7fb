//! Run configuration: one JSON file, optionally patched by `--set path=value`.
//!
//! Optional blocks are omitted on re-serialization, so a parsed file
//! serializes back to the same JSON value.

use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use pxe_core::lateral_grid::io::load_field;
use pxe_core::medium::spec::MediumSpec;
use pxe_core::propagator::EvolutionConfig;
use pxe_core::regularity::{band_limited_data, FitRange, InverseConfig, InverseThresholds};
use pxe_core::synthesis::{FrequencyFilter, TauGrid};
use pxe_core::{Error, Field, LateralGrid, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridBlock,
    pub medium: MediumSpec,
    pub evolution: EvolutionBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<InverseConfig>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionBlock {
    #[serde(rename = "Z")]
    pub z: f64,
    pub n: usize,
    pub substeps: usize,
    pub solver_tol: f64,
    /// Output depths for `simulate`; macro nodes only. Defaults to `Z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<f64>>,
    /// Krylov iteration cap per resolvent solve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_krylov_iter: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyBlock {
    #[serde(rename = "M")]
    pub m: usize,
    pub tau_max: f64,
    pub filter: FrequencyFilter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub initial: FieldSpec,
    /// Frequency profile multiplying the initial field at each `tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<FrequencyFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSpec>,
}

/// Lateral field description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    PlaneWave {
        k: [i64; 2],
    },
    Gaussian {
        center: [f64; 2],
        width: f64,
    },
    /// Random coefficients on modes `|k_i| <= modes`, drawn from the run seed.
    Random {
        modes: i64,
    },
    File {
        path: PathBuf,
    },
}

/// Source `g(z, tau, x) = amplitude * profile(tau) * field(x)`, constant in depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub field: FieldSpec,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    pub s_values: Vec<f64>,
    pub fit_range: FitRange,
    pub thresholds: InverseThresholds,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            s_values: vec![0.0, 1.0, 2.0],
            fit_range: FitRange::default(),
            thresholds: InverseThresholds::default(),
        }
    }
}

impl RunConfig {
    /// Parses `text`, applying each `path=value` override first. Values that
    /// are not valid JSON are taken as strings.
    pub fn parse(text: &str, overrides: &[String]) -> std::result::Result<Self, String> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| format!("config: {e}"))?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        serde_json::from_value(v).map_err(|e| format!("config: {e}"))
    }

    pub fn lateral_grid(&self) -> Result<Arc<LateralGrid>> {
        LateralGrid::new(self.grid.d, self.grid.n, self.grid.l)
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        let defaults = EvolutionConfig::default();
        EvolutionConfig {
            depth_end: self.evolution.z,
            macro_steps: self.evolution.n,
            micro_substeps: self.evolution.substeps,
            solver_tol: self.evolution.solver_tol,
            max_krylov_iter: self
                .evolution
                .max_krylov_iter
                .unwrap_or(defaults.max_krylov_iter),
            ..defaults
        }
    }

    pub fn tau_grid(&self) -> Result<TauGrid> {
        let f = self.frequency.ok_or_else(|| missing("frequency"))?;
        TauGrid::new(f.m, f.tau_max)
    }

    pub fn data(&self) -> Result<&DataBlock> {
        self.data.as_ref().ok_or_else(|| missing("data"))
    }

    pub fn analysis(&self) -> AnalysisBlock {
        self.analysis.clone().unwrap_or_default()
    }

    /// The `inverse` block with the analysis fit range and thresholds applied.
    pub fn inverse_config(&self) -> Result<InverseConfig> {
        let mut inv = self.inverse.clone().ok_or_else(|| missing("inverse"))?;
        if let Some(a) = &self.analysis {
            inv.fit_range = a.fit_range;
            inv.thresholds = a.thresholds;
        }
        Ok(inv)
    }
}

fn missing(block: &str) -> Error {
    Error::InvalidArgument(format!("config has no `{block}` block"))
}

fn apply_override(root: &mut Value, spec: &str) -> std::result::Result<(), String> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override `{spec}` is not of the form path=value"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.entry(key.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| format!("`{key}` in `{path}` is not an index"))?;
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| format!("index {idx} out of range in `{path}`"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(format!("`{path}` descends into a non-container value")),
        };
    }
    Err(format!("empty override path in `{spec}`"))
}

impl FieldSpec {
    pub fn build(&self, grid: &Arc<LateralGrid>, seed: u64) -> Result<Field> {
        match self {
            Self::Zero => Ok(Field::zeros(grid)),
            Self::PlaneWave { k } => Ok(Field::plane_wave(grid, *k)),
            Self::Gaussian { center, width } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "width must be positive, got {width}"
                    )));
                }
                Ok(Field::from_fn(grid, |x| {
                    let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                    Complex64::new((-r2 / (width * width)).exp(), 0.0)
                }))
            }
            Self::Random { modes } => band_limited_data(grid, *modes, seed),
            Self::File { path } => {
                let f = load_field(path)?;
                f.check_on(grid)?;
                Ok(Field::new(grid.clone(), f.into_values())?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn base() -> Value {
        json!({
            "grid": {"d": 2, "N": 16, "L": 8.0},
            "medium": {"c0": 1.0},
            "evolution": {"Z": 1.0, "n": 4, "substeps": 2, "solver_tol": 1e-10},
            "seed": 3
        })
    }

    #[test]
    fn overrides_patch_leaves() {
        let c = RunConfig::parse(
            &base().to_string(),
            &[
                "grid.N=32".into(),
                "evolution.Z=0.5".into(),
                "out_dir=runs/a".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.grid.n, 32);
        assert_eq!(c.evolution.z, 0.5);
        assert_eq!(c.out_dir, Some(PathBuf::from("runs/a")));
        assert!(RunConfig::parse(&base().to_string(), &["grid".into()]).is_err());
        assert!(RunConfig::parse(&base().to_string(), &["seed.x=1".into()]).is_err());
    }

    #[test]
    fn shipped_configs_round_trip() {
        for name in ["example.json", "zero.json", "inverse.json"] {
            let path = format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"));
            let text = std::fs::read_to_string(path).unwrap();
            let parsed = RunConfig::parse(&text, &[]).unwrap();
            let original: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(serde_json::to_value(&parsed).unwrap(), original, "{name}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = base();
        v["grid"]["M"] = json!(3);
        assert!(RunConfig::parse(&v.to_string(), &[]).is_err());
    }
}
