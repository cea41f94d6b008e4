//! A numerical laboratory for mean curvature flow.
//!
//! The crate evolves triangulated surfaces by mean curvature, both in
//! physical coordinates `(x, t)` and in Huisken's rescaled coordinates
//! `ξ = x / √(−2t)`, `s = −½ log(−t)`, and measures the quantities that
//! classify ancient type-I flows: Gaussian area and its dissipation, the
//! type-I ratio, non-collapsing, self-shrinker residuals and graph distance
//! to the model shrinkers.

pub mod analysis;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod huisken;
pub mod model_flows;

pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
