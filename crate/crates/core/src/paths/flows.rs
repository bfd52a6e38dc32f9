use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::path::ClusterId;
use super::table::PathTable;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowNode {
    pub layer: usize,
    pub cluster: ClusterId,
    /// Samples visiting this cluster.
    pub count: usize,
}

/// Samples moving from `from` at `layer` to `to` at `layer + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub layer: usize,
    pub from: ClusterId,
    pub to: ClusterId,
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SankeyFlows {
    pub nodes: Vec<FlowNode>,
    pub edges: Vec<FlowEdge>,
}

impl SankeyFlows {
    pub fn node(&self, layer: usize, cluster: ClusterId) -> Option<&FlowNode> {
        self.nodes.iter().find(|n| n.layer == layer && n.cluster == cluster)
    }

    pub fn inflow(&self, layer: usize, cluster: ClusterId) -> usize {
        self.edges
            .iter()
            .filter(|e| e.layer + 1 == layer && e.to == cluster)
            .map(|e| e.weight)
            .sum()
    }

    pub fn outflow(&self, layer: usize, cluster: ClusterId) -> usize {
        self.edges
            .iter()
            .filter(|e| e.layer == layer && e.from == cluster)
            .map(|e| e.weight)
            .sum()
    }
}

/// Node totals and adjacent-layer edge weights, ordered by (layer, cluster).
pub fn sankey_flows(table: &PathTable) -> SankeyFlows {
    let mut nodes: BTreeMap<(usize, ClusterId), usize> = BTreeMap::new();
    let mut edges: BTreeMap<(usize, ClusterId, ClusterId), usize> = BTreeMap::new();
    for (path, entry) in table.entries() {
        let ids = path.ids();
        for (l, &c) in ids.iter().enumerate() {
            *nodes.entry((l, c)).or_default() += entry.count;
        }
        for (l, w) in ids.windows(2).enumerate() {
            *edges.entry((l, w[0], w[1])).or_default() += entry.count;
        }
    }
    SankeyFlows {
        nodes: nodes
            .into_iter()
            .map(|((layer, cluster), count)| FlowNode { layer, cluster, count })
            .collect(),
        edges: edges
            .into_iter()
            .map(|((layer, from, to), weight)| FlowEdge { layer, from, to, weight })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::path::ClusterPath;

    #[test]
    fn single_path_single_edge() {
        let t = PathTable::from_paths(&vec![ClusterPath::new(vec![0, 1]); 7], None).unwrap();
        let f = sankey_flows(&t);
        assert_eq!(f.edges, vec![FlowEdge { layer: 0, from: 0, to: 1, weight: 7 }]);
        assert_eq!(f.node(1, 1).unwrap().count, 7);
    }

    #[test]
    fn conservation_and_naive_recount() {
        let paths: Vec<ClusterPath> = (0..97)
            .map(|i| ClusterPath::new(vec![i % 3, (i * 7) % 4, (i / 5) % 2, i % 2]))
            .collect();
        let t = PathTable::from_paths(&paths, None).unwrap();
        let f = sankey_flows(&t);
        for n in &f.nodes {
            if n.layer > 0 {
                assert_eq!(f.inflow(n.layer, n.cluster), n.count);
            }
            if n.layer + 1 < 4 {
                assert_eq!(f.outflow(n.layer, n.cluster), n.count);
            }
        }
        for e in &f.edges {
            let naive = paths
                .iter()
                .filter(|p| p.ids()[e.layer] == e.from && p.ids()[e.layer + 1] == e.to)
                .count();
            assert_eq!(e.weight, naive);
        }
    }
}
