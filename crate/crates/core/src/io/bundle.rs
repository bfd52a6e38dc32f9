use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::npy::{read_npy, write_npy};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BUNDLE_SCHEMA: &str = "clusterpath.bundle/1";
pub const LABELS_FILE: &str = "labels.npy";
pub const PREDICTIONS_FILE: &str = "predictions.npy";

/// One layer's activations: `n_samples` rows of `dim` values.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations {
    pub name: String,
    pub data: Matrix<f32>,
}

impl LayerActivations {
    pub fn new(name: impl Into<String>, data: Matrix<f32>) -> Self {
        Self {
            name: name.into(),
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }
}

/// Per-layer activations for a fixed sample set, plus optional labels and
/// network predictions. Immutable once constructed; every constructor path
/// validates the invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationBundle {
    n_samples: usize,
    layers: Vec<LayerActivations>,
    labels: Option<Vec<i64>>,
    predictions: Option<Vec<i64>>,
    meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    schema: String,
    n_samples: usize,
    layers: Vec<ManifestLayer>,
    labels: Option<String>,
    predictions: Option<String>,
    meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestLayer {
    name: String,
    dim: usize,
    file: String,
}

fn check_layer_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::Manifest(format!(
            "layer name `{name}` must be non-empty and use only [A-Za-z0-9_.-]"
        )))
    }
}

pub fn layer_file_name(index: usize, name: &str) -> String {
    format!("layer_{index}_{name}.npy")
}

impl ActivationBundle {
    pub fn new(
        layers: Vec<LayerActivations>,
        labels: Option<Vec<i64>>,
        predictions: Option<Vec<i64>>,
        meta: BTreeMap<String, String>,
    ) -> Result<Self> {
        let n_samples = layers
            .first()
            .map(|l| l.data.rows())
            .ok_or_else(|| Error::EmptyInput("bundle needs at least one layer".into()))?;
        let bundle = Self {
            n_samples,
            layers,
            labels,
            predictions,
            meta,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    fn validate(&self) -> Result<()> {
        for layer in &self.layers {
            check_layer_name(&layer.name)?;
            if layer.data.rows() != self.n_samples {
                return Err(Error::RowCountMismatch {
                    what: format!("layer `{}`", layer.name),
                    expected: self.n_samples,
                    found: layer.data.rows(),
                });
            }
            if layer.dim() == 0 {
                return Err(Error::Manifest(format!(
                    "layer `{}` has zero width",
                    layer.name
                )));
            }
            if let Some((row, col)) = layer.data.find_non_finite() {
                return Err(Error::NonFinite {
                    layer: layer.name.clone(),
                    row,
                    col,
                });
            }
        }
        for (what, v) in [("labels", &self.labels), ("predictions", &self.predictions)] {
            if let Some(v) = v {
                if v.len() != self.n_samples {
                    return Err(Error::RowCountMismatch {
                        what: what.into(),
                        expected: self.n_samples,
                        found: v.len(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LayerActivations] {
        &self.layers
    }

    pub fn layer(&self, i: usize) -> &LayerActivations {
        &self.layers[i]
    }

    pub fn layer_names(&self) -> Vec<String> {
        self.layers.iter().map(|l| l.name.clone()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.dim()).collect()
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn predictions(&self) -> Option<&[i64]> {
        self.predictions.as_deref()
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    /// Row `i` of every layer, in layer order.
    pub fn sample(&self, i: usize) -> Vec<&[f32]> {
        self.layers.iter().map(|l| l.data.row(i)).collect()
    }

    /// Same shape and metadata, with every layer matrix replaced by `f(layer_index, matrix)`.
    pub fn map_layers(
        &self,
        mut f: impl FnMut(usize, &Matrix<f32>) -> Matrix<f32>,
    ) -> Result<Self> {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| LayerActivations::new(l.name.clone(), f(i, &l.data)))
            .collect();
        Self::new(
            layers,
            self.labels.clone(),
            self.predictions.clone(),
            self.meta.clone(),
        )
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }
}

/// Writes the bundle directory. Identical bundles produce byte-identical files.
pub fn save_bundle(bundle: &ActivationBundle, dir: &Path) -> Result<()> {
    bundle.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut layers = Vec::with_capacity(bundle.layers.len());
    for (i, layer) in bundle.layers.iter().enumerate() {
        let file = layer_file_name(i, &layer.name);
        write_npy(
            &dir.join(&file),
            &[layer.data.rows(), layer.data.cols()],
            layer.data.as_slice(),
        )?;
        layers.push(ManifestLayer {
            name: layer.name.clone(),
            dim: layer.dim(),
            file,
        });
    }

    let write_ints = |v: &Option<Vec<i64>>, file: &str| -> Result<Option<String>> {
        match v {
            Some(v) => {
                write_npy(&dir.join(file), &[v.len()], v)?;
                Ok(Some(file.to_string()))
            }
            None => Ok(None),
        }
    };
    let labels = write_ints(&bundle.labels, LABELS_FILE)?;
    let predictions = write_ints(&bundle.predictions, PREDICTIONS_FILE)?;

    let manifest = Manifest {
        schema: BUNDLE_SCHEMA.into(),
        n_samples: bundle.n_samples,
        layers,
        labels,
        predictions,
        meta: bundle.meta.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Manifest(e.to_string()))?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_bundle(dir: &Path) -> Result<ActivationBundle> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Manifest(format!("{}: {e}", manifest_path.display())))?;
    if manifest.schema != BUNDLE_SCHEMA {
        return Err(Error::Manifest(format!(
            "unsupported schema `{}` (expected `{BUNDLE_SCHEMA}`)",
            manifest.schema
        )));
    }
    if manifest.layers.is_empty() {
        return Err(Error::Manifest("manifest lists no layers".into()));
    }

    let mut layers = Vec::with_capacity(manifest.layers.len());
    for entry in &manifest.layers {
        check_layer_name(&entry.name)?;
        let path = dir.join(&entry.file);
        let arr = read_npy::<f32>(&path)?;
        let (rows, cols) = match arr.shape.as_slice() {
            &[r, c] => (r, c),
            other => {
                return Err(Error::Npy {
                    path,
                    reason: format!("expected a 2-D array, found shape {other:?}"),
                })
            }
        };
        if rows != manifest.n_samples {
            return Err(Error::RowCountMismatch {
                what: format!("layer `{}`", entry.name),
                expected: manifest.n_samples,
                found: rows,
            });
        }
        if cols != entry.dim {
            return Err(Error::Manifest(format!(
                "layer `{}` declares dim {} but file has {cols} columns",
                entry.name, entry.dim
            )));
        }
        let data = Matrix::from_vec(rows, cols, arr.data)?;
        if let Some((row, col)) = data.find_non_finite() {
            return Err(Error::NonFinite {
                layer: entry.name.clone(),
                row,
                col,
            });
        }
        layers.push(LayerActivations::new(entry.name.clone(), data));
    }

    let read_ints = |file: &Option<String>, what: &str| -> Result<Option<Vec<i64>>> {
        let Some(file) = file else { return Ok(None) };
        let path = dir.join(file);
        let arr = read_npy::<i64>(&path)?;
        if arr.shape.len() != 1 {
            return Err(Error::Npy {
                path,
                reason: format!("expected a 1-D array, found shape {:?}", arr.shape),
            });
        }
        if arr.data.len() != manifest.n_samples {
            return Err(Error::RowCountMismatch {
                what: what.into(),
                expected: manifest.n_samples,
                found: arr.data.len(),
            });
        }
        Ok(Some(arr.data))
    };
    let labels = read_ints(&manifest.labels, "labels")?;
    let predictions = read_ints(&manifest.predictions, "predictions")?;

    let bundle = ActivationBundle {
        n_samples: manifest.n_samples,
        layers,
        labels,
        predictions,
        meta: manifest.meta,
    };
    bundle.validate()?;
    Ok(bundle)
}
