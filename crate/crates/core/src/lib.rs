//! Cluster paths for interpreting deep networks and detecting
//! out-of-distribution inputs.
//!
//! Activations are clustered layer by layer; the sequence of cluster IDs a
//! sample visits is its path. Paths feed purity, agreement, faithfulness and
//! divergence analyses, and path rarity drives the OOD detector.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod clustering;
pub mod error;
pub mod faithfulness;
pub mod io;
pub mod matrix;
pub mod ood;
pub mod paths;
pub mod scalar;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use io::{load_bundle, save_bundle, ActivationBundle, LayerActivations};
pub use matrix::Matrix;
pub use paths::{ClusterPath, PathTable};
pub use scalar::Scalar;

pub type MatrixF32 = Matrix<f32>;
pub type MatrixF64 = Matrix<f64>;
pub type KMeansModelF32 = clustering::KMeansLayerModel<f32>;
pub type KMeansModelF64 = clustering::KMeansLayerModel<f64>;
pub type GmmModelF32 = clustering::GmmLayerModel<f32>;
pub type GmmModelF64 = clustering::GmmLayerModel<f64>;
pub type PathModelF32 = paths::PathModel<f32>;
pub type PathModelF64 = paths::PathModel<f64>;
