use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::PathModel;
use super::path::ClusterPath;
use crate::error::{Error, Result};
use crate::io::ActivationBundle;
use crate::scalar::Scalar;

/// Which per-sample class vector a path table groups by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Ground-truth labels.
    Labels,
    /// The network's own predictions.
    Predictions,
}

impl LabelSource {
    pub fn name(self) -> &'static str {
        match self {
            LabelSource::Labels => "labels",
            LabelSource::Predictions => "predictions",
        }
    }

    pub fn select(self, bundle: &ActivationBundle) -> Result<&[i64]> {
        match self {
            LabelSource::Labels => bundle.labels(),
            LabelSource::Predictions => bundle.predictions(),
        }
        .ok_or(Error::MissingLabelSource(self.name()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub count: usize,
    pub class_counts: BTreeMap<i64, usize>,
    /// Ascending sample indices that follow this path.
    pub samples: Vec<usize>,
}

impl PathEntry {
    /// Dominant-class fraction; `None` without class information.
    pub fn purity(&self) -> Option<f64> {
        let max = self.class_counts.values().copied().max()?;
        Some(max as f64 / self.count as f64)
    }
}

/// Per-path sample counts, class counts and member indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTable {
    n_layers: usize,
    entries: BTreeMap<ClusterPath, PathEntry>,
    total: usize,
    label_source: Option<LabelSource>,
}

impl PathTable {
    /// Groups `paths` (sample `i` follows `paths[i]`), counting `classes[i]`
    /// per path when class information is given.
    pub fn from_paths(
        paths: &[ClusterPath],
        classes: Option<(&[i64], LabelSource)>,
    ) -> Result<Self> {
        let n_layers = paths.first().map_or(0, ClusterPath::len);
        if let Some((c, _)) = classes {
            if c.len() != paths.len() {
                return Err(Error::RowCountMismatch {
                    what: "path classes".into(),
                    expected: paths.len(),
                    found: c.len(),
                });
            }
        }
        let mut entries: BTreeMap<ClusterPath, PathEntry> = BTreeMap::new();
        for (i, p) in paths.iter().enumerate() {
            if p.len() != n_layers {
                return Err(Error::LengthMismatch(format!(
                    "path {i} has {} layers, expected {n_layers}",
                    p.len()
                )));
            }
            let e = entries.entry(p.clone()).or_default();
            e.count += 1;
            e.samples.push(i);
            if let Some((c, _)) = classes {
                *e.class_counts.entry(c[i]).or_default() += 1;
            }
        }
        Ok(Self {
            n_layers,
            entries,
            total: paths.len(),
            label_source: classes.map(|(_, s)| s),
        })
    }

    /// Combines two tables built over disjoint shards. Sample indices of
    /// `other` are shifted by `self.total()`.
    pub fn merge(mut self, other: PathTable) -> Result<Self> {
        if self.total > 0 && other.total > 0 && self.n_layers != other.n_layers {
            return Err(Error::LengthMismatch("tables have different path lengths".into()));
        }
        if self.label_source != other.label_source && self.total > 0 && other.total > 0 {
            return Err(Error::InvalidParameter("tables use different label sources".into()));
        }
        let offset = self.total;
        for (p, e) in other.entries {
            let dst = self.entries.entry(p).or_default();
            dst.count += e.count;
            dst.samples.extend(e.samples.iter().map(|s| s + offset));
            for (c, n) in e.class_counts {
                *dst.class_counts.entry(c).or_default() += n;
            }
        }
        if self.total == 0 {
            self.n_layers = other.n_layers;
            self.label_source = other.label_source;
        }
        self.total += other.total;
        Ok(self)
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn n_unique(&self) -> usize {
        self.entries.len()
    }

    pub fn label_source(&self) -> Option<LabelSource> {
        self.label_source
    }

    pub fn entries(&self) -> &BTreeMap<ClusterPath, PathEntry> {
        &self.entries
    }

    pub fn get(&self, path: &ClusterPath) -> Option<&PathEntry> {
        self.entries.get(path)
    }

    pub fn classes(&self) -> Vec<i64> {
        let mut set: Vec<i64> = self
            .entries
            .values()
            .flat_map(|e| e.class_counts.keys().copied())
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    }

    /// Entries ordered by descending count, ties by path.
    pub fn by_frequency(&self) -> Vec<(&ClusterPath, &PathEntry)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by(|a, b| b.1.count.cmp(&a.1.count).then_with(|| a.0.cmp(b.0)));
        v
    }
}

/// Generates every sample's path and groups them by the chosen class source.
pub fn build_path_table<T: Scalar>(
    model: &PathModel<T>,
    bundle: &ActivationBundle,
    label_source: LabelSource,
) -> Result<PathTable> {
    let classes = label_source.select(bundle)?;
    let paths = model.generate_paths(bundle)?;
    PathTable::from_paths(&paths, Some((classes, label_source)))
}
