use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::paths::ClusterPath;

/// Which layers contribute bits to the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingMode {
    #[default]
    FullPath,
    FinalLayerOnly,
}

impl EncodingMode {
    /// Cluster counts with masked layers set to zero width.
    pub fn mask(self, k_per_layer: &[usize]) -> Vec<usize> {
        match self {
            EncodingMode::FullPath => k_per_layer.to_vec(),
            EncodingMode::FinalLayerOnly => {
                let mut k = vec![0; k_per_layer.len()];
                if let (Some(last), Some(&kl)) = (k.last_mut(), k_per_layer.last()) {
                    *last = kl;
                }
                k
            }
        }
    }
}

/// Concatenated per-layer one-hot slices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedPath {
    pub bits: Vec<u8>,
    /// Start of each layer's slice; a final entry holds the total width.
    pub offsets: Vec<usize>,
}

impl EncodedPath {
    pub fn width(&self) -> usize {
        self.bits.len()
    }
}

fn offsets(k_per_layer: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(k_per_layer.len() + 1);
    let mut acc = 0;
    off.push(0);
    for &k in k_per_layer {
        acc += k;
        off.push(acc);
    }
    off
}

/// Sets bit `id` inside each layer's slice. Layers with `k = 0` are masked
/// out and contribute nothing.
pub fn one_hot_encode(path: &ClusterPath, k_per_layer: &[usize]) -> Result<EncodedPath> {
    if path.len() != k_per_layer.len() {
        return Err(Error::LengthMismatch(format!(
            "path of length {} for {} layers",
            path.len(),
            k_per_layer.len()
        )));
    }
    if let Some(layer) = path.first_sentinel() {
        return Err(Error::SentinelInPath { layer });
    }
    let offsets = offsets(k_per_layer);
    let mut bits = vec![0u8; *offsets.last().unwrap()];
    for (layer, (&id, &k)) in path.ids().iter().zip(k_per_layer).enumerate() {
        if k == 0 {
            continue;
        }
        if id as usize >= k {
            return Err(Error::ClusterOutOfRange { layer, id, k });
        }
        bits[offsets[layer] + id as usize] = 1;
    }
    Ok(EncodedPath { bits, offsets })
}

/// One row per path.
pub fn encode_paths(paths: &[ClusterPath], k_per_layer: &[usize], mode: EncodingMode) -> Result<Matrix<u8>> {
    let k = mode.mask(k_per_layer);
    let width = k.iter().sum();
    let mut data = Vec::with_capacity(paths.len() * width);
    for p in paths {
        data.extend(one_hot_encode(p, &k)?.bits);
    }
    Matrix::from_vec(paths.len(), width, data)
}
