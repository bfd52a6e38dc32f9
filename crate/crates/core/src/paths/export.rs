//! Delimited and structured exports of path tables.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::path::ClusterPath;
use super::table::{LabelSource, PathTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub path: ClusterPath,
    pub count: usize,
    pub class_counts: BTreeMap<i64, usize>,
    pub purity: Option<f64>,
    pub samples: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTableDoc {
    pub total: usize,
    pub n_unique: usize,
    pub label_source: Option<LabelSource>,
    pub classes: Vec<i64>,
    /// Rows by descending count.
    pub paths: Vec<PathRow>,
}

pub fn path_table_doc(table: &PathTable) -> PathTableDoc {
    PathTableDoc {
        total: table.total(),
        n_unique: table.n_unique(),
        label_source: table.label_source(),
        classes: table.classes(),
        paths: table
            .by_frequency()
            .into_iter()
            .map(|(p, e)| PathRow {
                path: p.clone(),
                count: e.count,
                class_counts: e.class_counts.clone(),
                purity: e.purity(),
                samples: e.samples.clone(),
            })
            .collect(),
    }
}

/// CSV with columns `path,count,class_<c>...,purity`, rows by descending count.
pub fn path_table_csv(table: &PathTable) -> String {
    let classes = table.classes();
    let labelled = table.label_source().is_some();
    let mut out = String::from("path,count");
    for c in &classes {
        let _ = write!(out, ",class_{c}");
    }
    if labelled {
        out.push_str(",purity");
    }
    out.push('\n');
    for (p, e) in table.by_frequency() {
        let _ = write!(out, "{p},{}", e.count);
        for c in &classes {
            let _ = write!(out, ",{}", e.class_counts.get(c).copied().unwrap_or(0));
        }
        if let Some(purity) = e.purity().filter(|_| labelled) {
            let _ = write!(out, ",{purity}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let paths = vec![
            ClusterPath::new(vec![0, 1]),
            ClusterPath::new(vec![1, 0]),
            ClusterPath::new(vec![1, 0]),
        ];
        let t = PathTable::from_paths(&paths, Some((&[3, 3, 5], LabelSource::Labels))).unwrap();
        let csv = path_table_csv(&t);
        assert_eq!(csv, "path,count,class_3,class_5,purity\n1->0,2,1,1,0.5\n0->1,1,1,0,1\n");
    }

    #[test]
    fn doc_serializes_paths_as_strings() {
        let t = PathTable::from_paths(&[ClusterPath::new(vec![2, 5, 1])], None).unwrap();
        let json = serde_json::to_value(path_table_doc(&t)).unwrap();
        assert_eq!(json["paths"][0]["path"], "2->5->1");
        assert!(json["paths"][0]["purity"].is_null());
    }
}
