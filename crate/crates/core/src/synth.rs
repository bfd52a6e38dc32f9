//! Seeded synthetic activation bundles with planted cluster structure.
//!
//! Every layer holds a set of isotropic Gaussian blobs. A sample's *driver*
//! (its class, or its cue when one is present) selects one blob per layer,
//! so each driver plants a chain of blobs through the network. Blob centers
//! come from `center_seed`, samples from `seed`, so bundles drawn with
//! different sample seeds share the same geometry.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{ActivationBundle, LayerActivations};
use crate::matrix::Matrix;

/// How a spurious cue relates to the class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueMode {
    /// No cue; chains follow the class.
    Off,
    /// With probability `p` a sample carries the cue matching its class;
    /// otherwise it carries none and follows its class.
    Correlated(f64),
    /// Every sample carries a uniformly random cue.
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionRule {
    /// Prediction is a function of the final-layer blob only.
    FinalBlob,
    /// Prediction mixes the blob IDs of every layer.
    PathFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub n_classes: usize,
    pub layer_dims: Vec<usize>,
    pub blobs_per_layer: Vec<usize>,
    pub sigma_within: f64,
    pub sigma_between: f64,
    pub cue: CueMode,
    /// Replace the middle layer's blob by an independent draw whose parity
    /// flips the prediction.
    pub intermediate_signal: bool,
    pub prediction_rule: PredictionRule,
    /// Per-layer offset added to every coordinate (outlier generation).
    pub shift: Option<Vec<f64>>,
    pub seed: u64,
    pub center_seed: u64,
}

impl SynthSpec {
    /// Separation/spread ratio 10, one blob per class on every layer.
    pub fn well_separated(n_samples: usize, n_classes: usize, layer_dims: Vec<usize>, seed: u64) -> Self {
        let blobs = vec![n_classes; layer_dims.len()];
        Self {
            n_samples,
            n_classes,
            layer_dims,
            blobs_per_layer: blobs,
            sigma_within: 1.0,
            sigma_between: 10.0,
            cue: CueMode::Off,
            intermediate_signal: false,
            prediction_rule: PredictionRule::FinalBlob,
            shift: None,
            seed,
            center_seed: seed,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.layer_dims.len()
    }

    /// Layer whose blob carries the extra bit in intermediate-signal mode.
    pub fn signal_layer(&self) -> usize {
        (self.n_layers().saturating_sub(1)) / 2
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.layer_dims.is_empty() {
            return bad("at least one layer is required".into());
        }
        if self.layer_dims.len() != self.blobs_per_layer.len() {
            return bad(format!(
                "{} layer dims but {} blob counts",
                self.layer_dims.len(),
                self.blobs_per_layer.len()
            ));
        }
        if self.layer_dims.contains(&0) || self.blobs_per_layer.contains(&0) {
            return bad("layer dims and blob counts must be positive".into());
        }
        if self.n_samples == 0 || self.n_classes == 0 {
            return bad("n_samples and n_classes must be positive".into());
        }
        if !(self.sigma_within >= 0.0 && self.sigma_between >= 0.0) {
            return bad("spreads must be non-negative".into());
        }
        if let CueMode::Correlated(p) = self.cue {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("cue probability {p} outside [0, 1]"));
            }
        }
        if let Some(s) = &self.shift {
            if s.len() != self.n_layers() {
                return bad(format!("shift has {} entries for {} layers", s.len(), self.n_layers()));
            }
        }
        if self.intermediate_signal {
            if self.n_layers() < 2 {
                return bad("intermediate signal needs at least two layers".into());
            }
            if self.blobs_per_layer[self.signal_layer()] < 2 {
                return bad("intermediate signal layer needs at least two blobs".into());
            }
        }
        Ok(())
    }
}

/// Ground truth behind a generated bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantRecord {
    pub spec: SynthSpec,
    /// `centers[l][b]` is the center of blob `b` on layer `l`.
    pub centers: Vec<Vec<Vec<f64>>>,
    /// Blob chain planted by each driver value.
    pub chains: Vec<Vec<usize>>,
    pub classes: Vec<i64>,
    /// Cue carried by each sample, -1 for none.
    pub cues: Vec<i64>,
    /// Blob chain each sample was drawn from.
    pub sample_chains: Vec<Vec<usize>>,
}

impl PlantRecord {
    /// Distinct chains actually drawn, with their sample counts.
    pub fn chain_counts(&self) -> BTreeMap<Vec<usize>, usize> {
        let mut m = BTreeMap::new();
        for c in &self.sample_chains {
            *m.entry(c.clone()).or_default() += 1;
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub bundle: ActivationBundle,
    pub plant: PlantRecord,
}

fn min_pairwise_distance(centers: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let d: f64 = centers[i].iter().zip(&centers[j]).map(|(a, b)| (a - b).powi(2)).sum();
            best = best.min(d.sqrt());
        }
    }
    best
}

struct Geometry {
    centers: Vec<Vec<Vec<f64>>>,
    /// perm[l][driver % blobs] = blob
    perms: Vec<Vec<usize>>,
    inv_perms: Vec<Vec<usize>>,
}

fn draw_geometry(spec: &SynthSpec) -> Geometry {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.center_seed);
    let mut centers = Vec::new();
    let mut perms = Vec::new();
    let mut inv_perms = Vec::new();
    for (&d, &b) in spec.layer_dims.iter().zip(&spec.blobs_per_layer) {
        // Redraw until no two centers are closer than sigma_between.
        let mut layer = Vec::new();
        for _attempt in 0..1000 {
            layer = (0..b)
                .map(|_| {
                    (0..d)
                        .map(|_| rng.sample::<f64, _>(StandardNormal) * spec.sigma_between)
                        .collect()
                })
                .collect();
            if b < 2 || min_pairwise_distance(&layer) >= spec.sigma_between {
                break;
            }
        }
        centers.push(layer);
        let mut perm: Vec<usize> = (0..b).collect();
        perm.shuffle(&mut rng);
        let mut inv = vec![0; b];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        perms.push(perm);
        inv_perms.push(inv);
    }
    Geometry {
        centers,
        perms,
        inv_perms,
    }
}

/// Draws a bundle (labels and predictions filled) plus its plant record.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let geo = draw_geometry(spec);
    let n_layers = spec.n_layers();
    let c = spec.n_classes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5EED_0F5A_u64.rotate_left(17));

    let chain_of = |driver: usize| -> Vec<usize> {
        geo.perms
            .iter()
            .map(|perm| perm[driver % perm.len()])
            .collect()
    };

    let mut classes = Vec::with_capacity(spec.n_samples);
    let mut cues = Vec::with_capacity(spec.n_samples);
    let mut chains = Vec::with_capacity(spec.n_samples);
    let mut predictions = Vec::with_capacity(spec.n_samples);
    let mut layers: Vec<Vec<f32>> = spec
        .layer_dims
        .iter()
        .map(|d| Vec::with_capacity(d * spec.n_samples))
        .collect();

    for _ in 0..spec.n_samples {
        let class = rng.random_range(0..c);
        let cue = match spec.cue {
            CueMode::Off => None,
            CueMode::Correlated(p) => (rng.random::<f64>() < p).then_some(class),
            CueMode::Randomized => Some(rng.random_range(0..c)),
        };
        let driver = cue.unwrap_or(class);
        let mut chain = chain_of(driver);
        let mut flip = 0;
        if spec.intermediate_signal {
            let m = spec.signal_layer();
            let b = rng.random_range(0..spec.blobs_per_layer[m]);
            chain[m] = b;
            flip = geo.inv_perms[m][b] % 2;
        }
        let base = match spec.prediction_rule {
            PredictionRule::FinalBlob => geo.inv_perms[n_layers - 1][chain[n_layers - 1]],
            PredictionRule::PathFunction => chain
                .iter()
                .enumerate()
                .map(|(l, &b)| geo.inv_perms[l][b] * (l + 1))
                .sum(),
        };
        predictions.push(((base + flip) % c) as i64);

        for (l, &b) in chain.iter().enumerate() {
            let offset = spec.shift.as_ref().map_or(0.0, |s| s[l]);
            for &mu in &geo.centers[l][b] {
                let z: f64 = rng.sample(StandardNormal);
                layers[l].push((mu + spec.sigma_within * z + offset) as f32);
            }
        }
        classes.push(class as i64);
        cues.push(cue.map_or(-1, |v| v as i64));
        chains.push(chain);
    }

    let layers = layers
        .into_iter()
        .zip(&spec.layer_dims)
        .enumerate()
        .map(|(l, (data, &d))| Ok(LayerActivations::new(format!("synth{l}"), Matrix::from_vec(spec.n_samples, d, data)?)))
        .collect::<Result<Vec<_>>>()?;
    let meta = BTreeMap::from([
        ("generator".to_string(), "clusterpath-synth".to_string()),
        ("seed".to_string(), spec.seed.to_string()),
        ("center_seed".to_string(), spec.center_seed.to_string()),
    ]);
    let bundle = ActivationBundle::new(layers, Some(classes.clone()), Some(predictions), meta)?;
    let planted = (0..c).map(chain_of).collect();
    Ok(SynthOutput {
        bundle,
        plant: PlantRecord {
            spec: spec.clone(),
            centers: geo.centers,
            chains: planted,
            classes,
            cues,
            sample_chains: chains,
        },
    })
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every activation. `sigma == 0`
/// returns an element-identical bundle.
pub fn generate_perturbed(bundle: &ActivationBundle, sigma: f64, seed: u64) -> Result<ActivationBundle> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("noise scale must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(bundle.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = bundle.map_layers(|_, m| {
        let mut m = m.clone();
        for v in m.as_mut_slice() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = (*v as f64 + sigma * z) as f32;
        }
        m
    })?;
    Ok(out.with_meta("perturbation_sigma", sigma.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_counts() {
        let mut spec = SynthSpec::well_separated(100, 3, vec![8, 4, 2], 1);
        spec.blobs_per_layer = vec![3, 3, 3];
        let out = generate(&spec).unwrap();
        assert_eq!(out.bundle.n_samples(), 100);
        assert_eq!(out.bundle.dims(), vec![8, 4, 2]);
        assert_eq!(out.bundle.labels().unwrap().len(), 100);
        assert_eq!(out.plant.sample_chains.len(), 100);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SynthSpec::well_separated(50, 2, vec![3, 3], 9);
        assert_eq!(generate(&spec).unwrap().bundle, generate(&spec).unwrap().bundle);
        let mut other = spec.clone();
        other.seed = 10;
        let (a, b) = (generate(&spec).unwrap(), generate(&other).unwrap());
        assert_ne!(a.bundle, b.bundle);
        assert_eq!(a.plant.centers, b.plant.centers);
    }

    #[test]
    fn centers_respect_minimum_gap() {
        let mut spec = SynthSpec::well_separated(10, 5, vec![2, 3], 4);
        spec.blobs_per_layer = vec![5, 5];
        let out = generate(&spec).unwrap();
        for layer in &out.plant.centers {
            assert!(min_pairwise_distance(layer) >= spec.sigma_between);
        }
    }

    #[test]
    fn correlated_one_plants_class_chains() {
        let mut spec = SynthSpec::well_separated(200, 2, vec![4, 4], 3);
        spec.cue = CueMode::Correlated(1.0);
        let out = generate(&spec).unwrap();
        for (chain, class) in out.plant.sample_chains.iter().zip(&out.plant.classes) {
            assert_eq!(chain, &out.plant.chains[*class as usize]);
        }
        assert_eq!(out.plant.chain_counts().len(), 2);
        assert!(out.plant.cues.iter().zip(&out.plant.classes).all(|(c, k)| c == k));
    }

    #[test]
    fn randomized_cue_decouples_chain_from_class() {
        let mut spec = SynthSpec::well_separated(5000, 2, vec![4, 4], 3);
        spec.cue = CueMode::Randomized;
        let out = generate(&spec).unwrap();
        for (chain, _) in out.plant.chain_counts() {
            let members: Vec<usize> = (0..5000).filter(|&i| out.plant.sample_chains[i] == chain).collect();
            let ones = members.iter().filter(|&&i| out.plant.classes[i] == 1).count();
            let frac = ones as f64 / members.len() as f64;
            assert!((frac - 0.5).abs() < 0.05, "{frac}");
        }
    }

    #[test]
    fn final_blob_predictions_are_function_of_last_blob() {
        let spec = SynthSpec::well_separated(300, 3, vec![4, 4, 4], 8);
        let out = generate(&spec).unwrap();
        let preds = out.bundle.predictions().unwrap();
        let mut seen: BTreeMap<usize, i64> = BTreeMap::new();
        for (chain, &p) in out.plant.sample_chains.iter().zip(preds) {
            let prev = seen.entry(chain[2]).or_insert(p);
            assert_eq!(*prev, p);
        }
        // without a cue every sample follows its class, so predictions are the class
        assert_eq!(preds, out.bundle.labels().unwrap());
    }

    #[test]
    fn intermediate_signal_requires_two_layers() {
        let mut spec = SynthSpec::well_separated(10, 2, vec![4], 0);
        spec.intermediate_signal = true;
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn inconsistent_spec_rejected() {
        let mut spec = SynthSpec::well_separated(10, 2, vec![4, 4], 0);
        spec.blobs_per_layer = vec![2];
        assert!(generate(&spec).is_err());
        let mut spec = SynthSpec::well_separated(10, 2, vec![4, 4], 0);
        spec.shift = Some(vec![1.0]);
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let b = generate(&SynthSpec::well_separated(20, 2, vec![3], 0)).unwrap().bundle;
        assert_eq!(generate_perturbed(&b, 0.0, 5).unwrap(), b);
        assert_ne!(generate_perturbed(&b, 0.1, 5).unwrap(), b);
        assert!(generate_perturbed(&b, -1.0, 5).is_err());
    }
}
