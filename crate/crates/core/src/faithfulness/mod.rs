//! Decision-alignment faithfulness of cluster paths: how well a random forest
//! trained on one-hot path encodings mimics the network's predictions.

pub mod daf;
pub mod encode;
pub mod forest;

pub use daf::{daf_for_paths, daf_score, train_test_split, ClassAgreement, DafConfig, DafReport};
pub use encode::{encode_paths, one_hot_encode, EncodedPath, EncodingMode};
pub use forest::{forest_predict, grow_tree, train_forest, DecisionTree, ForestProxy, Node};
