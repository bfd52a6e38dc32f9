//! Per-layer unsupervised models: k-means for cluster paths and
//! full-covariance Gaussian mixtures for out-of-distribution scoring.

mod gmm;
mod kmeans;
pub mod linalg;

pub use gmm::{
    calibrate_floors, fit_gmm, gmm_log_density, gmm_responsibility_argmax, GmmConfig,
    GmmLayerModel,
};
pub use kmeans::{
    assign_nearest, fit_kmeans, kmeans_plus_plus, lloyd_run, KMeansConfig, KMeansLayerModel,
    LloydRun,
};
