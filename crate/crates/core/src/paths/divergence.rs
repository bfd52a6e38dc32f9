use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::path::{ClusterId, ClusterPath};
use super::table::PathTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// Cluster ID at the diverging layer.
    pub cluster: ClusterId,
    pub path: ClusterPath,
    pub count: usize,
    pub samples: Vec<usize>,
}

/// Paths that agree everywhere except at `layer`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceGroup {
    pub layer: usize,
    /// Shared coordinates, e.g. `X->5->7->74` for layer 0.
    pub pattern: String,
    pub branches: Vec<Branch>,
}

impl DivergenceGroup {
    pub fn total(&self) -> usize {
        self.branches.iter().map(|b| b.count).sum()
    }
}

/// Groups paths by their coordinates outside `layer`; groups with a single
/// branch are dropped.
pub fn divergence_groups(table: &PathTable, layer: usize) -> Result<Vec<DivergenceGroup>> {
    if table.total() > 0 && layer >= table.n_layers() {
        return Err(Error::InvalidParameter(format!(
            "layer {layer} out of range for paths of length {}",
            table.n_layers()
        )));
    }
    let mut groups: BTreeMap<Vec<ClusterId>, Vec<Branch>> = BTreeMap::new();
    for (path, entry) in table.entries() {
        let mut key = path.ids().to_vec();
        let cluster = key.remove(layer);
        groups.entry(key).or_default().push(Branch {
            cluster,
            path: path.clone(),
            count: entry.count,
            samples: entry.samples.clone(),
        });
    }
    Ok(groups
        .into_iter()
        .filter(|(_, b)| b.len() > 1)
        .map(|(key, branches)| {
            let mut parts: Vec<String> = key.iter().map(ClusterId::to_string).collect();
            parts.insert(layer, "X".into());
            DivergenceGroup {
                layer,
                pattern: parts.join("->"),
                branches,
            }
        })
        .collect())
}
