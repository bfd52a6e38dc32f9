//! Cluster-path generation and the path-level interpretability metrics.

mod divergence;
mod export;
mod flows;
mod metrics;
mod model;
mod path;
mod table;

pub use divergence::{divergence_groups, Branch, DivergenceGroup};
pub use export::{path_table_csv, path_table_doc, PathRow, PathTableDoc};
pub use flows::{sankey_flows, FlowEdge, FlowNode, SankeyFlows};
pub use metrics::{
    coverage_curve, hamming_agreement, hamming_distance, mean_path_agreement, path_complexity,
    weighted_purity,
};
pub use model::{
    fit_path_model, fit_path_model_layers, generate_path, load_path_model, save_path_model,
    ClusteringSettings, PathModel, PATH_MODEL_FILE, PATH_MODEL_SCHEMA,
};
pub use path::{ClusterId, ClusterPath, SENTINEL};
pub use table::{build_path_table, LabelSource, PathEntry, PathTable};
