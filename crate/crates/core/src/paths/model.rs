use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::ClusterPath;
use crate::clustering::{fit_kmeans, KMeansConfig, KMeansLayerModel};
use crate::error::{Error, Result};
use crate::io::npy::{read_npy, write_npy};
use crate::io::ActivationBundle;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const PATH_MODEL_FILE: &str = "path_model.json";
pub const PATH_MODEL_SCHEMA: &str = "clusterpath.path-model/1";

/// k-means settings shared by every layer of a path model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSettings {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ClusteringSettings {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
            seed: 0,
        }
    }
}

/// One fitted k-means model per clustered layer, in bundle layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathModel<T> {
    pub layer_names: Vec<String>,
    pub layer_models: Vec<KMeansLayerModel<T>>,
}

impl<T: Scalar> PathModel<T> {
    pub fn n_layers(&self) -> usize {
        self.layer_models.len()
    }

    pub fn k_per_layer(&self) -> Vec<usize> {
        self.layer_models.iter().map(|m| m.k).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.layer_models.iter().map(|m| m.dim()).collect()
    }

    /// Nearest-centroid ID at every layer for one sample (one row per layer).
    pub fn generate_path<P: Scalar, R: AsRef<[P]>>(&self, sample: &[R]) -> Result<ClusterPath> {
        if sample.len() != self.n_layers() {
            return Err(Error::LengthMismatch(format!(
                "sample has {} layers, model has {}",
                sample.len(),
                self.n_layers()
            )));
        }
        let ids = self
            .layer_models
            .iter()
            .zip(sample)
            .map(|(m, row)| m.assign_one(row.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(ClusterPath::from_indices(&ids))
    }

    fn check_bundle(&self, bundle: &ActivationBundle) -> Result<()> {
        if bundle.n_layers() != self.n_layers() {
            return Err(Error::LengthMismatch(format!(
                "bundle has {} layers, model has {}",
                bundle.n_layers(),
                self.n_layers()
            )));
        }
        for (m, l) in self.layer_models.iter().zip(bundle.layers()) {
            if m.dim() != l.dim() {
                return Err(Error::DimensionMismatch {
                    expected: m.dim(),
                    found: l.dim(),
                });
            }
        }
        Ok(())
    }

    /// Paths for every sample of a bundle, in sample order.
    pub fn generate_paths(&self, bundle: &ActivationBundle) -> Result<Vec<ClusterPath>> {
        self.check_bundle(bundle)?;
        let per_layer: Vec<Vec<usize>> = self
            .layer_models
            .par_iter()
            .zip(bundle.layers().par_iter())
            .map(|(m, l)| crate::clustering::assign_nearest(m, &l.data))
            .collect::<Result<_>>()?;
        Ok((0..bundle.n_samples())
            .map(|i| ClusterPath::from_indices(&per_layer.iter().map(|ids| ids[i]).collect::<Vec<_>>()))
            .collect())
    }
}

/// Fits one k-means model per named layer matrix.
pub fn fit_path_model_layers<T: Scalar>(
    layers: &[(&str, &Matrix<T>)],
    k_per_layer: &[usize],
    settings: &ClusteringSettings,
) -> Result<PathModel<T>> {
    if layers.is_empty() {
        return Err(Error::EmptyInput("no layers to cluster".into()));
    }
    if k_per_layer.len() != layers.len() {
        return Err(Error::LengthMismatch(format!(
            "{} cluster counts for {} layers",
            k_per_layer.len(),
            layers.len()
        )));
    }
    let layer_models = layers
        .par_iter()
        .zip(k_per_layer.par_iter())
        .map(|((_, data), &k)| {
            fit_kmeans(
                *data,
                &KMeansConfig {
                    k,
                    restarts: settings.restarts,
                    max_iter: settings.max_iter,
                    tol: settings.tol,
                    seed: settings.seed,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathModel {
        layer_names: layers.iter().map(|(n, _)| n.to_string()).collect(),
        layer_models,
    })
}

/// Clusters every layer of the bundle independently.
pub fn fit_path_model(
    bundle: &ActivationBundle,
    k_per_layer: &[usize],
    settings: &ClusteringSettings,
) -> Result<PathModel<f32>> {
    let layers: Vec<(&str, &Matrix<f32>)> = bundle
        .layers()
        .iter()
        .map(|l| (l.name.as_str(), &l.data))
        .collect();
    fit_path_model_layers(&layers, k_per_layer, settings)
}

/// Convenience wrapper for [`PathModel::generate_path`].
pub fn generate_path<T: Scalar, P: Scalar, R: AsRef<[P]>>(model: &PathModel<T>, sample: &[R]) -> Result<ClusterPath> {
    model.generate_path(sample)
}

// --- persistence -----------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct PathModelMeta {
    schema: String,
    dtype: String,
    layers: Vec<LayerMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerMeta {
    name: String,
    k: usize,
    dim: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    tol: f64,
    iterations_run: usize,
    inertia: f64,
    centroids: String,
}

pub fn save_path_model<T: Scalar>(model: &PathModel<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut layers = Vec::new();
    for (i, (name, m)) in model.layer_names.iter().zip(&model.layer_models).enumerate() {
        let file = format!("centroids_{i}_{name}.npy");
        write_npy(&dir.join(&file), &[m.k, m.dim()], m.centroids.as_slice())?;
        layers.push(LayerMeta {
            name: name.clone(),
            k: m.k,
            dim: m.dim(),
            seed: m.seed,
            restarts: m.restarts,
            max_iter: m.max_iter,
            tol: m.tol,
            iterations_run: m.iterations_run,
            inertia: m.inertia,
            centroids: file,
        });
    }
    let meta = PathModelMeta {
        schema: PATH_MODEL_SCHEMA.into(),
        dtype: T::DESCR.into(),
        layers,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Manifest(e.to_string()))?;
    let path = dir.join(PATH_MODEL_FILE);
    fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_path_model<T: Scalar>(dir: &Path) -> Result<PathModel<T>> {
    let path = dir.join(PATH_MODEL_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: PathModelMeta =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    if meta.schema != PATH_MODEL_SCHEMA {
        return Err(Error::Manifest(format!("unsupported schema `{}`", meta.schema)));
    }
    if meta.dtype != T::DESCR {
        return Err(Error::Manifest(format!(
            "model stored as `{}`, requested `{}`",
            meta.dtype,
            T::DESCR
        )));
    }
    let mut layer_names = Vec::new();
    let mut layer_models = Vec::new();
    for l in meta.layers {
        let arr = read_npy::<T>(&dir.join(&l.centroids))?;
        if arr.shape != [l.k, l.dim] {
            return Err(Error::Manifest(format!(
                "centroids for `{}` have shape {:?}, expected [{}, {}]",
                l.name, arr.shape, l.k, l.dim
            )));
        }
        layer_names.push(l.name);
        layer_models.push(KMeansLayerModel {
            k: l.k,
            centroids: Matrix::from_vec(l.k, l.dim, arr.data)?,
            inertia: l.inertia,
            seed: l.seed,
            iterations_run: l.iterations_run,
            restarts: l.restarts,
            max_iter: l.max_iter,
            tol: l.tol,
        });
    }
    if layer_models.is_empty() {
        return Err(Error::Manifest("path model lists no layers".into()));
    }
    Ok(PathModel {
        layer_names,
        layer_models,
    })
}
