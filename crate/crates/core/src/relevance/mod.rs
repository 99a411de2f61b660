//! Prediction-difference relevance: measures, the sliding-window engine and
//! the relevance-map format.

mod config;
mod explain;
mod map;
pub mod measures;
pub mod windows;

pub use config::{ClassLayer, ExplainConfig, Measure, SamplerKind, Target};
pub use explain::{explain, removed_estimate, PatchSource};
pub(crate) use explain::explain_units;
pub use map::{RelevanceMap, MAP_MAGIC};
pub use measures::{activation_difference, laplace_correct, odds, weight_of_evidence, Laplace};
