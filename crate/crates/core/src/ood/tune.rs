use serde::{Deserialize, Serialize};

use super::curves::{aupr, auroc, fpr_at_95tpr};
use super::index::OodIndex;
use crate::error::{Error, Result};
use crate::io::ActivationBundle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPoint {
    pub epsilon: f64,
    pub flag_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTuning {
    pub epsilon: f64,
    pub flag_rate: f64,
    pub max_flag_rate: f64,
    pub sweep: Vec<EpsilonPoint>,
}

pub fn default_epsilon_grid() -> Vec<f64> {
    vec![1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1]
}

/// Largest grid epsilon whose flag rate on held-out inlier rarities stays
/// within `max_flag_rate`.
pub fn tune_epsilon(heldout_rarities: &[f64], grid: &[f64], max_flag_rate: f64) -> Result<EpsilonTuning> {
    if heldout_rarities.is_empty() {
        return Err(Error::EmptyInput("no held-out samples to tune on".into()));
    }
    if grid.is_empty() {
        return Err(Error::EmptyInput("empty epsilon grid".into()));
    }
    let n = heldout_rarities.len() as f64;
    let sweep: Vec<EpsilonPoint> = grid
        .iter()
        .map(|&epsilon| EpsilonPoint {
            epsilon,
            flag_rate: heldout_rarities.iter().filter(|&&r| r < epsilon).count() as f64 / n,
        })
        .collect();
    let best = sweep
        .iter()
        .filter(|p| p.flag_rate <= max_flag_rate)
        .max_by(|a, b| a.epsilon.total_cmp(&b.epsilon))
        .copied()
        .ok_or(Error::NoFeasibleEpsilon { bound: max_flag_rate })?;
    Ok(EpsilonTuning {
        epsilon: best.epsilon,
        flag_rate: best.flag_rate,
        max_flag_rate,
        sweep,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodEvaluation {
    pub auroc: f64,
    pub aupr: f64,
    pub fpr_at_95tpr: f64,
    pub n_in: usize,
    pub n_out: usize,
    /// Flag rates at the index's epsilon.
    pub inlier_flag_rate: f64,
    pub outlier_flag_rate: f64,
}

/// Rarity-scored detector curves with inliers as positives.
pub fn evaluate(index: &OodIndex, inliers: &ActivationBundle, outliers: &ActivationBundle) -> Result<OodEvaluation> {
    let a = index.score_bundle(inliers)?;
    let b = index.score_bundle(outliers)?;
    let sa: Vec<f64> = a.iter().map(|s| s.rarity).collect();
    let sb: Vec<f64> = b.iter().map(|s| s.rarity).collect();
    let rate = |v: &[super::OodScore]| v.iter().filter(|s| s.flagged).count() as f64 / v.len().max(1) as f64;
    Ok(OodEvaluation {
        auroc: auroc(&sa, &sb)?,
        aupr: aupr(&sa, &sb)?,
        fpr_at_95tpr: fpr_at_95tpr(&sa, &sb)?,
        n_in: sa.len(),
        n_out: sb.len(),
        inlier_flag_rate: rate(&a),
        outlier_flag_rate: rate(&b),
    })
}
