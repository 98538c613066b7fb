//! Spectral solver for the paraxial depth-evolution problem with rough
//! lateral coefficients.
//!
//! At a fixed temporal frequency `tau` the wave field obeys
//! `dv/dz - i A v = g` with `A v = div(c grad v)` on a periodic lateral torus.
//! The modules build on each other in this order:
//!
//! - [`lateral_grid`]: grid, transforms, spectral derivatives, Sobolev norms
//! - [`medium`]: the coefficient `c(z, x, tau) = c0 + sum c_l(z, x) h_l(tau)`
//! - [`generator`]: the frozen operator, its resolvent, the regularity ledger
//! - [`propagator`]: Cayley steps, product-formula evolution, mild solutions
//! - [`synthesis`]: many frequencies at once and the time-domain picture
//! - [`regularity`]: Fourier-tail exponent estimates and the inverse experiment

pub mod error;
pub mod generator;
pub mod lateral_grid;
pub mod medium;
pub mod propagator;
pub mod regularity;
pub mod synthesis;

pub use error::{Error, Result};
pub use lateral_grid::{Field, LateralGrid};
