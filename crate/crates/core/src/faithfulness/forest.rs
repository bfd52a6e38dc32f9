//! Random forest of Gini CART trees over binary features.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        class: i64,
    },
    /// Samples with `feature <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, row: &[u8]) -> i64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if (row[*feature] as f64) <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestProxy {
    pub trees: Vec<DecisionTree>,
    pub n_trees: usize,
    pub seed: u64,
    pub n_features: usize,
    /// Features examined per split.
    pub max_features: usize,
}

fn majority(counts: &BTreeMap<i64, usize>) -> i64 {
    // BTreeMap iterates ascending, and only a strictly larger count replaces
    // the current best, so ties resolve to the lowest class.
    let mut best = (i64::MIN, 0usize);
    for (&c, &n) in counts {
        if n > best.1 {
            best = (c, n);
        }
    }
    best.0
}

fn gini(counts: &BTreeMap<i64, usize>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.values().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Grower<'a> {
    x: &'a Matrix<u8>,
    y: &'a [i64],
    max_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(&mut self, idx: Vec<usize>) -> usize {
        let mut counts = BTreeMap::new();
        for &i in &idx {
            *counts.entry(self.y[i]).or_insert(0usize) += 1;
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: majority(&counts),
        });
        if counts.len() < 2 {
            return id;
        }

        // Visit features in random order until `max_features` non-constant
        // ones have been examined; constant features do not count.
        let mut order: Vec<usize> = (0..self.x.cols()).collect();
        order.shuffle(&mut self.rng);
        let mut examined = 0;
        let mut best: Option<(f64, usize)> = None;
        for f in order {
            if examined == self.max_features {
                break;
            }
            let mut left = BTreeMap::new();
            let mut n_left = 0;
            for &i in &idx {
                if self.x.get(i, f) == 0 {
                    *left.entry(self.y[i]).or_insert(0usize) += 1;
                    n_left += 1;
                }
            }
            if n_left == 0 || n_left == idx.len() {
                continue;
            }
            examined += 1;
            let mut right = counts.clone();
            for (c, n) in &left {
                *right.get_mut(c).unwrap() -= n;
            }
            let n_right = idx.len() - n_left;
            let score = (n_left as f64 * gini(&left, n_left) + n_right as f64 * gini(&right, n_right)) / idx.len() as f64;
            let better = match best {
                None => true,
                Some((s, bf)) => score < s || (score == s && f < bf),
            };
            if better {
                best = Some((score, f));
            }
        }
        // Impure node with no usable feature stays a leaf. Otherwise split,
        // even at zero gain: one-hot parity targets need it.
        let Some((_, feature)) = best else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x.get(i, feature) == 0);
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[id] = Node::Split {
            feature,
            threshold: 0.5,
            left,
            right,
        };
        id
    }
}

/// Grows one tree on the given sample indices (with repetition allowed).
pub fn grow_tree(features: &Matrix<u8>, targets: &[i64], sample: Vec<usize>, max_features: usize, seed: u64) -> DecisionTree {
    let mut g = Grower {
        x: features,
        y: targets,
        max_features: max_features.max(1),
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: Vec::new(),
    };
    g.grow(sample);
    DecisionTree { nodes: g.nodes }
}

/// `n_trees` trees on bootstrap resamples; tree `t` uses seed `seed + t`.
pub fn train_forest(features: &Matrix<u8>, targets: &[i64], n_trees: usize, seed: u64) -> Result<ForestProxy> {
    let n = features.rows();
    if n < 2 {
        return Err(Error::EmptyInput(format!("forest needs at least 2 samples, got {n}")));
    }
    if targets.len() != n {
        return Err(Error::LengthMismatch(format!("{n} feature rows, {} targets", targets.len())));
    }
    if n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
    }
    let max_features = ((features.cols() as f64).sqrt().floor() as usize).max(1);
    let trees = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = seed.wrapping_add(t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow_tree(features, targets, sample, max_features, tree_seed ^ 0x9E37_79B9_7F4A_7C15)
        })
        .collect();
    Ok(ForestProxy {
        trees,
        n_trees,
        seed,
        n_features: features.cols(),
        max_features,
    })
}

/// Majority vote across trees; ties go to the lowest class.
pub fn forest_predict(proxy: &ForestProxy, features: &Matrix<u8>) -> Result<Vec<i64>> {
    if features.cols() != proxy.n_features && features.rows() > 0 {
        return Err(Error::DimensionMismatch {
            expected: proxy.n_features,
            found: features.cols(),
        });
    }
    Ok((0..features.rows())
        .into_par_iter()
        .map(|i| {
            let row = features.row(i);
            let mut votes = BTreeMap::new();
            for t in &proxy.trees {
                *votes.entry(t.predict(row)).or_insert(0usize) += 1;
            }
            majority(&votes)
        })
        .collect())
}
