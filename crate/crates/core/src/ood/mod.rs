//! Out-of-distribution detection from cluster-path rarity.
//!
//! Each layer's activation vector is compressed to six statistics, modelled by
//! a Gaussian mixture with per-component log-density floors. A path uses the
//! sentinel wherever a floor is violated, for training and test samples alike,
//! and a sample is scored by how often its exact path occurred in training.

mod curves;
mod index;
mod summary;
mod tune;

pub use curves::{aupr, auroc, fpr_at_95tpr, roc_points};
pub use index::{
    fit_ood_index, flag, flag_with, load_ood_index, ood_path, rarity_score, save_ood_index, OodIndex, OodScore,
    OOD_INDEX_FILE, OOD_INDEX_SCHEMA, PATH_FREQ_FILE,
};
pub use summary::{summarize, summarize_rows, SummaryVector, SUMMARY_FIELDS};
pub use tune::{default_epsilon_grid, evaluate, tune_epsilon, EpsilonPoint, EpsilonTuning, OodEvaluation};
