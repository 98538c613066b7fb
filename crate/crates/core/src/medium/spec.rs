//! Serializable description of a medium, as it appears in run files.
//!
//! ```json
//! {"c0": 1.0, "terms": [{"kind": "example", "alpha": 0.5, "r1": 1.0, "r2": 3.0,
//!                        "symbol": {"kind": "one"}}]}
//! ```
//!
//! Optional keys stay absent on re-serialization so that configs round-trip.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    build_example_medium, ConstantCoefficient, DepthProfile, ExampleParams, ExprCoefficient,
    FrequencySymbol, Medium,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub c0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermSpec>,
}

/// A depth profile: a bare number or `{"a": .., "b": ..}` for `a + b z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Constant(f64),
    Linear { a: f64, b: f64 },
}

impl From<ProfileSpec> for DepthProfile {
    fn from(p: ProfileSpec) -> Self {
        match p {
            ProfileSpec::Constant(c) => DepthProfile::Constant(c),
            ProfileSpec::Linear { a, b } => DepthProfile::Linear { a, b },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    One,
    InvTau { eta0: f64 },
}

impl SymbolSpec {
    pub fn build(self) -> Result<FrequencySymbol> {
        match self {
            Self::One => Ok(FrequencySymbol::One),
            Self::InvTau { eta0 } if eta0 > 0.0 && eta0.is_finite() => {
                Ok(FrequencySymbol::InvTau { eta0 })
            }
            Self::InvTau { eta0 } => Err(Error::InvalidMedium(format!(
                "eta0 must be positive, got {eta0}"
            ))),
        }
    }
}

fn build_symbol(s: &Option<SymbolSpec>) -> Result<FrequencySymbol> {
    s.unwrap_or(SymbolSpec::One).build()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermSpec {
    Example {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        chi0: Option<ProfileSpec>,
        alpha: ProfileSpec,
        r1: f64,
        r2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symbol: Option<SymbolSpec>,
    },
    Constant {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symbol: Option<SymbolSpec>,
    },
    Expr {
        expr: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symbol: Option<SymbolSpec>,
    },
}

impl MediumSpec {
    /// Builds the medium; `depth` bounds the range over which depth profiles are checked.
    pub fn build(&self, depth: f64) -> Result<Medium> {
        let mut medium = Medium::constant(self.c0)?;
        for term in &self.terms {
            medium = match term {
                TermSpec::Example {
                    chi0,
                    alpha,
                    r1,
                    r2,
                    eps,
                    symbol,
                } => {
                    let single = build_example_medium(ExampleParams {
                        c0: self.c0,
                        chi0: chi0.unwrap_or(ProfileSpec::Constant(1.0)).into(),
                        alpha: (*alpha).into(),
                        r1: *r1,
                        r2: *r2,
                        regularize_eps: eps.unwrap_or(0.0),
                        symbol: build_symbol(symbol)?,
                        declared_r: None,
                        depth,
                    })?;
                    let t = single.terms()[0].clone();
                    medium.with_term(t.coefficient, t.symbol)
                }
                TermSpec::Constant { value, symbol } => {
                    medium.with_term(Arc::new(ConstantCoefficient(*value)), build_symbol(symbol)?)
                }
                TermSpec::Expr { expr, symbol } => medium.with_term(
                    Arc::new(ExprCoefficient::parse(expr)?),
                    build_symbol(symbol)?,
                ),
            };
        }
        if let Some(r) = self.r {
            medium = medium.with_regularity(r)?;
        }
        Ok(medium)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn parses_and_round_trips() {
        let v = json!({
            "c0": 1.0,
            "terms": [
                {"kind": "example", "chi0": {"a": 1.0, "b": 0.5}, "alpha": 0.5, "r1": 1.0, "r2": 3.0,
                 "symbol": {"kind": "inv_tau", "eta0": 0.25}},
                {"kind": "constant", "value": 0.2},
                {"kind": "expr", "expr": "math::exp(-r^2)"}
            ]
        });
        let spec: MediumSpec = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(serde_json::to_value(&spec).unwrap(), v);
        let m = spec.build(1.0).unwrap();
        assert_eq!(m.terms().len(), 3);
        assert!((m.regularity() - 0.45).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_kinds_and_bad_values() {
        let bad = json!({"c0": 1.0, "terms": [{"kind": "bogus"}]});
        assert!(serde_json::from_value::<MediumSpec>(bad).is_err());
        let neg = json!({"c0": -1.0});
        let spec: MediumSpec = serde_json::from_value(neg).unwrap();
        assert!(spec.build(1.0).is_err());
        let eta = json!({"c0": 1.0, "terms": [{"kind": "constant", "value": 1.0,
                          "symbol": {"kind": "inv_tau", "eta0": 0.0}}]});
        let spec: MediumSpec = serde_json::from_value(eta).unwrap();
        assert!(spec.build(1.0).is_err());
    }

    #[test]
    fn explicit_r_overrides_declared() {
        let v = json!({"c0": 1.0, "r": 0.3,
                       "terms": [{"kind": "example", "alpha": 0.5, "r1": 1.0, "r2": 3.0}]});
        let spec: MediumSpec = serde_json::from_value(v).unwrap();
        assert_eq!(spec.build(1.0).unwrap().regularity(), 0.3);
    }
}
