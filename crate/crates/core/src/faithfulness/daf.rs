use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encode::{encode_paths, EncodingMode};
use super::forest::{forest_predict, train_forest};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::paths::ClusterPath;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DafConfig {
    pub n_trees: usize,
    /// Fraction of samples used to train the proxy; the rest is held out.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for DafConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAgreement {
    pub n: usize,
    pub agree: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DafReport {
    pub daf: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// Keyed by the network's prediction.
    pub per_class: BTreeMap<i64, ClassAgreement>,
    pub config: DafConfig,
}

/// Seeded uniform (unstratified) split into train and held-out indices.
pub fn train_test_split(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if n < 3 {
        return Err(Error::EmptyInput(format!("need at least 3 samples to split, got {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64 * train_fraction).round() as usize).clamp(2, n - 1);
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// Trains the forest proxy on the train split and reports its agreement with
/// `predictions` on the held-out split.
pub fn daf_score(features: &Matrix<u8>, predictions: &[i64], config: &DafConfig) -> Result<DafReport> {
    if predictions.len() != features.rows() {
        return Err(Error::LengthMismatch(format!(
            "{} feature rows, {} predictions",
            features.rows(),
            predictions.len()
        )));
    }
    let (train, test) = train_test_split(features.rows(), config.train_fraction, config.seed)?;
    let train_y: Vec<i64> = train.iter().map(|&i| predictions[i]).collect();
    let forest = train_forest(&features.select_rows(&train), &train_y, config.n_trees, config.seed)?;
    let got = forest_predict(&forest, &features.select_rows(&test))?;

    let mut per_class: BTreeMap<i64, ClassAgreement> = BTreeMap::new();
    let mut agree = 0;
    for (&i, g) in test.iter().zip(&got) {
        let f = predictions[i];
        let e = per_class.entry(f).or_insert(ClassAgreement {
            n: 0,
            agree: 0,
            rate: 0.0,
        });
        e.n += 1;
        if *g == f {
            e.agree += 1;
            agree += 1;
        }
    }
    for e in per_class.values_mut() {
        e.rate = e.agree as f64 / e.n as f64;
    }
    Ok(DafReport {
        daf: agree as f64 / test.len() as f64,
        n_train: train.len(),
        n_test: test.len(),
        per_class,
        config: *config,
    })
}

/// One-hot encodes the paths under `mode`, then scores as [`daf_score`].
pub fn daf_for_paths(
    paths: &[ClusterPath],
    k_per_layer: &[usize],
    predictions: Option<&[i64]>,
    mode: EncodingMode,
    config: &DafConfig,
) -> Result<DafReport> {
    let predictions = predictions.ok_or(Error::MissingLabelSource("predictions"))?;
    daf_score(&encode_paths(paths, k_per_layer, mode)?, predictions, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn grid_paths(n: usize, seed: u64) -> Vec<ClusterPath> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| ClusterPath::from_indices(&[rng.random_range(0..3), rng.random_range(0..3), rng.random_range(0..2)]))
            .collect()
    }

    #[test]
    fn path_function_predictions_near_perfect() {
        let paths = grid_paths(1000, 1);
        let preds: Vec<i64> = paths.iter().map(|p| ((p.ids()[0] + 2 * p.ids()[1] + p.ids()[2]) % 3) as i64).collect();
        let r = daf_for_paths(&paths, &[3, 3, 2], Some(&preds), EncodingMode::FullPath, &DafConfig::default()).unwrap();
        assert!(r.daf >= 0.99, "{}", r.daf);
        assert_eq!(r.n_train + r.n_test, 1000);
        assert_eq!(r.n_test, 200);
    }

    #[test]
    fn path_independent_predictions_near_half() {
        let paths = grid_paths(2000, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let preds: Vec<i64> = (0..2000).map(|_| rng.random_range(0..2)).collect();
        let r = daf_for_paths(&paths, &[3, 3, 2], Some(&preds), EncodingMode::FullPath, &DafConfig::default()).unwrap();
        assert!((r.daf - 0.5).abs() <= 0.05, "{}", r.daf);
    }

    #[test]
    fn missing_predictions_and_bad_split() {
        let paths = grid_paths(10, 3);
        assert!(matches!(
            daf_for_paths(&paths, &[3, 3, 2], None, EncodingMode::FullPath, &DafConfig::default()),
            Err(Error::MissingLabelSource(_))
        ));
        let cfg = DafConfig {
            train_fraction: 1.0,
            ..DafConfig::default()
        };
        assert!(daf_for_paths(&paths, &[3, 3, 2], Some(&[0; 10]), EncodingMode::FullPath, &cfg).is_err());
    }

    #[test]
    fn per_class_counts_sum_to_test_size() {
        let paths = grid_paths(300, 4);
        let preds: Vec<i64> = paths.iter().map(|p| p.ids()[2] as i64).collect();
        let r = daf_for_paths(&paths, &[3, 3, 2], Some(&preds), EncodingMode::FinalLayerOnly, &DafConfig::default()).unwrap();
        assert_eq!(r.per_class.values().map(|c| c.n).sum::<usize>(), r.n_test);
        assert_eq!(r.daf, 1.0);
    }

    #[test]
    fn deterministic() {
        let paths = grid_paths(200, 5);
        let preds: Vec<i64> = (0..200).map(|i| (i % 2) as i64).collect();
        let cfg = DafConfig {
            seed: 17,
            ..DafConfig::default()
        };
        let a = daf_for_paths(&paths, &[3, 3, 2], Some(&preds), EncodingMode::FullPath, &cfg).unwrap();
        let b = daf_for_paths(&paths, &[3, 3, 2], Some(&preds), EncodingMode::FullPath, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
