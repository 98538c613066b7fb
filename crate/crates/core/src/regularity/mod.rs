//! Sobolev-exponent estimation and regularity experiments.

mod estimate;
mod inverse;
mod product;

pub(crate) use estimate::linear_fit;

pub use estimate::{
    estimate_sobolev_exponent, shell_spectrum, EstimateStatus, FitRange, RegularityEstimate,
    MIN_SPAN, ROUNDOFF_FLOOR, SMOOTH_EXPONENT,
};
pub use inverse::{
    band_h2_norm, band_limited_data, inverse_regularity_experiment, DepthRecord, InverseConfig,
    InverseFlag, InverseReport, InverseThresholds, ResolutionReport,
};
pub use product::{
    product_regularity_check, random_field, CheckReport, ProductCheckConfig, TrialResult,
    SPECTRUM_DELTA,
};
