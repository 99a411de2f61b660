//! Prediction difference analysis for image classifiers.
//!
//! Given a classifier and an input image, every `k × k` window of the image
//! is marginalized out by sampling replacement values (from other images at
//! the same location, or from a Gaussian patch model conditioned on the
//! surrounding `l × l` context), and the resulting change of a target
//! quantity is attributed back to the window's pixels:
//!
//! * class probabilities are compared through the weight of evidence
//!   (log₂-odds difference, optionally Laplace-smoothed);
//! * logits and hidden units are compared through the activation difference.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the double-precision instantiation used by
//! the file formats and the command-line tool.

mod binio;
pub mod classifier;
pub mod deepvis;
pub mod error;
pub mod image;
pub mod imaging;
pub mod linalg;
pub mod parallel;
pub mod patch_model;
pub mod relevance;
pub mod rng;
pub mod scalar;
pub mod synthetic;

pub use classifier::{ClassifierOutput, Layer, LayerKind, LayerTap, Network, Shape, UnitSelector};
pub use error::{Error, Result};
pub use image::Image;
pub use patch_model::{GaussianPatchModel, InnerOffset, MarginalSampler, PatchCorpus, PatchGeometry, Selection};
pub use relevance::{explain, ClassLayer, ExplainConfig, Laplace, Measure, PatchSource, RelevanceMap, SamplerKind, Target};
pub use scalar::Scalar;

pub type Image64 = image::Image<f64>;
pub type Image32 = image::Image<f32>;
pub type Network64 = classifier::Network<f64>;
pub type Network32 = classifier::Network<f32>;
pub type GaussianPatchModel64 = patch_model::GaussianPatchModel<f64>;
pub type GaussianPatchModel32 = patch_model::GaussianPatchModel<f32>;
pub type RelevanceMap64 = relevance::RelevanceMap<f64>;
pub type RelevanceMap32 = relevance::RelevanceMap<f32>;
pub type SensitivityMap64 = classifier::SensitivityMap<f64>;
pub type FeatureMapReport64 = deepvis::FeatureMapReport<f64>;
