use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::summary::{summarize, summarize_rows, SUMMARY_FIELDS};
use crate::clustering::{calibrate_floors, fit_gmm, GmmConfig, GmmLayerModel};
use crate::error::{Error, Result};
use crate::io::npy::{read_npy, write_npy};
use crate::io::ActivationBundle;
use crate::matrix::Matrix;
use crate::paths::{ClusterPath, SENTINEL};
use crate::scalar::Scalar;

pub const OOD_INDEX_FILE: &str = "ood_index.json";
pub const OOD_INDEX_SCHEMA: &str = "clusterpath.ood-index/1";
pub const PATH_FREQ_FILE: &str = "path_freq.csv";

/// Per-layer mixtures over activation summaries plus training-path counts.
#[derive(Debug, Clone, PartialEq)]
pub struct OodIndex {
    pub layer_names: Vec<String>,
    /// Fitted on six-dimensional summaries, floors calibrated.
    pub layer_gmms: Vec<GmmLayerModel<f64>>,
    pub path_freq: BTreeMap<ClusterPath, usize>,
    pub n_train: usize,
    pub epsilon: f64,
    pub rho: f64,
}

/// Path, rarity and flag for one scored sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodScore {
    pub path: ClusterPath,
    pub rarity: f64,
    pub flagged: bool,
}

fn floored_id(g: &GmmLayerModel<f64>, summary: &[f64]) -> Result<i32> {
    let (c, ld) = g.classify(summary)?;
    let floor = g.floors.as_ref().map_or(f64::NEG_INFINITY, |f| f[c]);
    Ok(if ld < floor { SENTINEL } else { c as i32 })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    Ok(())
}

/// Summarizes every layer, fits one mixture per layer, calibrates floors at
/// `rho` and counts the training paths, floored the same way as test paths.
pub fn fit_ood_index(
    bundle: &ActivationBundle,
    k_per_layer: &[usize],
    rho: f64,
    epsilon: f64,
    gmm: &GmmConfig,
) -> Result<OodIndex> {
    check_epsilon(epsilon)?;
    if k_per_layer.len() != bundle.n_layers() {
        return Err(Error::LengthMismatch(format!(
            "{} cluster counts for {} layers",
            k_per_layer.len(),
            bundle.n_layers()
        )));
    }
    let fitted: Vec<(GmmLayerModel<f64>, Vec<i32>)> = bundle
        .layers()
        .par_iter()
        .zip(k_per_layer.par_iter())
        .map(|(layer, &k)| {
            let summaries = summarize_rows(&layer.data)?;
            let model = fit_gmm(&summaries, &GmmConfig { k, ..*gmm })?;
            let model = calibrate_floors(&model, &summaries, rho)?;
            let ids = summaries
                .iter_rows()
                .map(|s| floored_id(&model, s))
                .collect::<Result<Vec<_>>>()?;
            Ok((model, ids))
        })
        .collect::<Result<_>>()?;
    let mut path_freq = BTreeMap::new();
    for i in 0..bundle.n_samples() {
        let ids: Vec<i32> = fitted.iter().map(|(_, ids)| ids[i]).collect();
        *path_freq.entry(ClusterPath::new(ids)).or_insert(0) += 1;
    }
    Ok(OodIndex {
        layer_names: bundle.layer_names(),
        layer_gmms: fitted.into_iter().map(|(m, _)| m).collect(),
        path_freq,
        n_train: bundle.n_samples(),
        epsilon,
        rho,
    })
}

impl OodIndex {
    pub fn n_layers(&self) -> usize {
        self.layer_gmms.len()
    }

    pub fn k_per_layer(&self) -> Vec<usize> {
        self.layer_gmms.iter().map(|g| g.k()).collect()
    }

    fn layer_id(&self, layer: usize, summary: &[f64]) -> Result<i32> {
        floored_id(&self.layer_gmms[layer], summary)
    }

    /// Argmax component per layer, replaced by the sentinel wherever the
    /// summary's log-density falls below that component's floor.
    pub fn ood_path<T: Scalar, R: AsRef<[T]>>(&self, sample: &[R]) -> Result<ClusterPath> {
        if sample.len() != self.n_layers() {
            return Err(Error::LengthMismatch(format!(
                "sample has {} layers, index has {}",
                sample.len(),
                self.n_layers()
            )));
        }
        let ids = sample
            .iter()
            .enumerate()
            .map(|(l, a)| self.layer_id(l, &summarize(a.as_ref())?.to_array()))
            .collect::<Result<Vec<_>>>()?;
        Ok(ClusterPath::new(ids))
    }

    pub fn ood_paths(&self, bundle: &ActivationBundle) -> Result<Vec<ClusterPath>> {
        if bundle.n_layers() != self.n_layers() {
            return Err(Error::LengthMismatch(format!(
                "bundle has {} layers, index has {}",
                bundle.n_layers(),
                self.n_layers()
            )));
        }
        let per_layer: Vec<Vec<i32>> = bundle
            .layers()
            .par_iter()
            .enumerate()
            .map(|(l, layer)| {
                let s = summarize_rows(&layer.data)?;
                (0..s.rows())
                    .into_par_iter()
                    .map(|i| self.layer_id(l, s.row(i)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok((0..bundle.n_samples())
            .map(|i| ClusterPath::new(per_layer.iter().map(|ids| ids[i]).collect()))
            .collect())
    }

    /// Empirical training probability of the exact path, sentinels included;
    /// 0 for a path never seen in training.
    pub fn rarity_score(&self, path: &ClusterPath) -> f64 {
        if self.n_train == 0 {
            return 0.0;
        }
        self.path_freq.get(path).map_or(0.0, |&c| c as f64 / self.n_train as f64)
    }

    /// `(rarity < epsilon, rarity)` with the index's own epsilon.
    pub fn flag(&self, path: &ClusterPath) -> (bool, f64) {
        flag_with(self.rarity_score(path), self.epsilon)
    }

    pub fn score_bundle(&self, bundle: &ActivationBundle) -> Result<Vec<OodScore>> {
        Ok(self
            .ood_paths(bundle)?
            .into_iter()
            .map(|path| {
                let (flagged, rarity) = self.flag(&path);
                OodScore { path, rarity, flagged }
            })
            .collect())
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        self.epsilon = epsilon;
        Ok(self)
    }
}

/// Strict comparison: a rarity equal to epsilon is not flagged.
pub fn flag_with(rarity: f64, epsilon: f64) -> (bool, f64) {
    (rarity < epsilon, rarity)
}

pub fn ood_path<T: Scalar, R: AsRef<[T]>>(index: &OodIndex, sample: &[R]) -> Result<ClusterPath> {
    index.ood_path(sample)
}

pub fn rarity_score(index: &OodIndex, path: &ClusterPath) -> f64 {
    index.rarity_score(path)
}

pub fn flag(index: &OodIndex, path: &ClusterPath) -> (bool, f64) {
    index.flag(path)
}

// --- persistence -----------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct IndexMeta {
    schema: String,
    summary_fields: Vec<String>,
    n_train: usize,
    epsilon: f64,
    rho: f64,
    path_freq: String,
    layers: Vec<LayerMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerMeta {
    name: String,
    k: usize,
    rho: Option<f64>,
    config: GmmConfig,
    iterations_run: usize,
    final_log_likelihood: Option<f64>,
    weights: String,
    means: String,
    covariances: String,
    floors: Option<String>,
}

pub fn save_ood_index(index: &OodIndex, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut layers = Vec::new();
    for (i, (name, g)) in index.layer_names.iter().zip(&index.layer_gmms).enumerate() {
        let (k, d) = (g.k(), g.dim());
        let file = |part: &str| format!("gmm_{i}_{part}.npy");
        write_npy(&dir.join(file("weights")), &[k], &g.weights)?;
        write_npy(&dir.join(file("means")), &[k, d], g.means.as_slice())?;
        let covs: Vec<f64> = g.covariances.iter().flat_map(|c| c.as_slice().iter().copied()).collect();
        write_npy(&dir.join(file("covariances")), &[k, d, d], &covs)?;
        let floors = match &g.floors {
            Some(f) => {
                write_npy(&dir.join(file("floors")), &[k], f)?;
                Some(file("floors"))
            }
            None => None,
        };
        layers.push(LayerMeta {
            name: name.clone(),
            k,
            rho: g.rho,
            config: g.config,
            iterations_run: g.iterations_run,
            final_log_likelihood: g.log_likelihood_trace.last().copied(),
            weights: file("weights"),
            means: file("means"),
            covariances: file("covariances"),
            floors,
        });
    }
    let mut csv = String::from("path,count\n");
    for (p, c) in &index.path_freq {
        csv.push_str(&format!("{p},{c}\n"));
    }
    let freq_path = dir.join(PATH_FREQ_FILE);
    fs::write(&freq_path, csv).map_err(|e| Error::io(&freq_path, e))?;
    let meta = IndexMeta {
        schema: OOD_INDEX_SCHEMA.into(),
        summary_fields: SUMMARY_FIELDS.iter().map(|s| s.to_string()).collect(),
        n_train: index.n_train,
        epsilon: index.epsilon,
        rho: index.rho,
        path_freq: PATH_FREQ_FILE.into(),
        layers,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Manifest(e.to_string()))?;
    let path = dir.join(OOD_INDEX_FILE);
    fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
}

fn expect_shape(what: &str, got: &[usize], want: &[usize]) -> Result<()> {
    if got != want {
        return Err(Error::Manifest(format!("{what} has shape {got:?}, expected {want:?}")));
    }
    Ok(())
}

pub fn load_ood_index(dir: &Path) -> Result<OodIndex> {
    let path = dir.join(OOD_INDEX_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: IndexMeta =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    if meta.schema != OOD_INDEX_SCHEMA {
        return Err(Error::Manifest(format!("unsupported schema `{}`", meta.schema)));
    }
    if meta.summary_fields != SUMMARY_FIELDS {
        return Err(Error::Manifest(format!("unexpected summary field order {:?}", meta.summary_fields)));
    }
    let mut layer_names = Vec::new();
    let mut layer_gmms = Vec::new();
    for l in meta.layers {
        let d = SUMMARY_FIELDS.len();
        let w = read_npy::<f64>(&dir.join(&l.weights))?;
        expect_shape(&l.weights, &w.shape, &[l.k])?;
        let m = read_npy::<f64>(&dir.join(&l.means))?;
        expect_shape(&l.means, &m.shape, &[l.k, d])?;
        let c = read_npy::<f64>(&dir.join(&l.covariances))?;
        expect_shape(&l.covariances, &c.shape, &[l.k, d, d])?;
        let covs = c
            .data
            .chunks(d * d)
            .map(|ch| Matrix::from_vec(d, d, ch.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let mut g = GmmLayerModel::from_parts(w.data, Matrix::from_vec(l.k, d, m.data)?, covs, l.config)?;
        if let Some(f) = &l.floors {
            let arr = read_npy::<f64>(&dir.join(f))?;
            expect_shape(f, &arr.shape, &[l.k])?;
            g.floors = Some(arr.data);
        }
        g.rho = l.rho;
        g.iterations_run = l.iterations_run;
        g.log_likelihood_trace = l.final_log_likelihood.into_iter().collect();
        layer_names.push(l.name);
        layer_gmms.push(g);
    }
    if layer_gmms.is_empty() {
        return Err(Error::Manifest("OOD index lists no layers".into()));
    }

    let freq_path = dir.join(&meta.path_freq);
    let csv = fs::read_to_string(&freq_path).map_err(|e| Error::io(&freq_path, e))?;
    let mut path_freq = BTreeMap::new();
    for (n, line) in csv.lines().enumerate().skip(1) {
        let bad = || Error::Manifest(format!("{}:{}: malformed row `{line}`", freq_path.display(), n + 1));
        let (p, c) = line.rsplit_once(',').ok_or_else(bad)?;
        let p: ClusterPath = p.parse().map_err(|_| bad())?;
        let c: usize = c.parse().map_err(|_| bad())?;
        path_freq.insert(p, c);
    }
    if path_freq.values().sum::<usize>() != meta.n_train {
        return Err(Error::Manifest("path counts do not sum to n_train".into()));
    }
    Ok(OodIndex {
        layer_names,
        layer_gmms,
        path_freq,
        n_train: meta.n_train,
        epsilon: meta.epsilon,
        rho: meta.rho,
    })
}
