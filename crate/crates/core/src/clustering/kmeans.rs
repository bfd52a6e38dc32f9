//! Lloyd's k-means with k-means++ seeding and seeded restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Fitted centroids for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansLayerModel<T> {
    pub k: usize,
    pub centroids: Matrix<T>,
    /// Sum over training points of the squared distance to the nearest centroid.
    pub inertia: f64,
    pub seed: u64,
    pub iterations_run: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

/// Outcome of a single seeded Lloyd run.
#[derive(Debug, Clone)]
pub struct LloydRun<T> {
    pub centroids: Matrix<T>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Inertia at every assignment step, followed by the final inertia.
    pub inertia_trace: Vec<f64>,
}

fn nearest<T: Scalar, C: Scalar>(point: &[T], centroids: &Matrix<C>) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter_rows().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    (best, best_d)
}

fn check_points<T: Scalar>(points: &Matrix<T>) -> Result<()> {
    if let Some((row, col)) = points.find_non_finite() {
        return Err(Error::NonFiniteInput { row, col });
    }
    Ok(())
}

/// k-means++ seeding: first center uniform, each further center drawn with
/// probability proportional to squared distance to the nearest chosen center.
pub fn kmeans_plus_plus<T: Scalar>(points: &Matrix<T>, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = points.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = points
        .iter_rows()
        .map(|p| squared_distance(p, points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just above the final partial sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        let c = points.row(next);
        for (i, p) in points.iter_rows().enumerate() {
            let d = squared_distance(p, c);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    chosen
}

/// One k-means++ seeded Lloyd run.
pub fn lloyd_run<T: Scalar>(
    points: &Matrix<T>,
    k: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> LloydRun<T> {
    let (n, d) = (points.rows(), points.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = kmeans_plus_plus(points, k, &mut rng);
    let mut centroids = points.select_rows(&seeds);

    let mut labels = vec![0usize; n];
    let mut dists = vec![0f64; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        for (i, p) in points.iter_rows().enumerate() {
            let (j, dist) = nearest(p, &centroids);
            labels[i] = j;
            dists[i] = dist;
        }
        trace.push(dists.iter().sum());

        let mut sums = vec![0f64; k * d];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter_rows().enumerate() {
            let j = labels[i];
            counts[j] += 1;
            for (s, v) in sums[j * d..(j + 1) * d].iter_mut().zip(p) {
                *s += v.as_f64();
            }
        }

        let mut next = centroids.clone();
        for j in 0..k {
            if counts[j] == 0 {
                // Reseed to the point farthest from its assigned centroid.
                let far = (0..n).fold(0, |best, i| if dists[i] > dists[best] { i } else { best });
                next.row_mut(j).copy_from_slice(points.row(far));
                dists[far] = 0.0;
            } else {
                let inv = 1.0 / counts[j] as f64;
                for (c, s) in next.row_mut(j).iter_mut().zip(&sums[j * d..(j + 1) * d]) {
                    *c = T::from_f64_lossy(s * inv);
                }
            }
        }

        let shift = (0..k)
            .map(|j| squared_distance(centroids.row(j), next.row(j)).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        iterations += 1;
        if shift < tol {
            converged = true;
            break;
        }
    }

    let inertia = points.iter_rows().map(|p| nearest(p, &centroids).1).sum();
    trace.push(inertia);
    LloydRun {
        centroids,
        inertia,
        iterations,
        converged,
        inertia_trace: trace,
    }
}

/// Runs `restarts` seeded Lloyd runs (restart `r` uses seed `seed + r`) and
/// keeps the one with the lowest inertia, ties to the earliest restart.
pub fn fit_kmeans<T: Scalar>(points: &Matrix<T>, config: &KMeansConfig) -> Result<KMeansLayerModel<T>> {
    let n = points.rows();
    if config.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if config.k > n {
        return Err(Error::TooManyClusters { k: config.k, n });
    }
    if points.cols() == 0 {
        return Err(Error::EmptyInput("points have zero width".into()));
    }
    check_points(points)?;
    let restarts = config.restarts.max(1);

    let runs: Vec<LloydRun<T>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            lloyd_run(
                points,
                config.k,
                config.max_iter,
                config.tol,
                config.seed.wrapping_add(r as u64),
            )
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");

    Ok(KMeansLayerModel {
        k: config.k,
        centroids: best.centroids,
        inertia: best.inertia,
        seed: config.seed,
        iterations_run: best.iterations,
        restarts,
        max_iter: config.max_iter,
        tol: config.tol,
    })
}

impl<T: Scalar> KMeansLayerModel<T> {
    pub fn dim(&self) -> usize {
        self.centroids.cols()
    }

    /// Nearest centroid for one point; ties go to the lowest index.
    pub fn assign_one<P: Scalar>(&self, point: &[P]) -> Result<usize> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: point.len(),
            });
        }
        Ok(nearest(point, &self.centroids).0)
    }

    /// Sum of squared distances from `points` to their nearest centroids.
    pub fn inertia_of<P: Scalar>(&self, points: &Matrix<P>) -> Result<f64> {
        if points.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: points.cols(),
            });
        }
        Ok(points.iter_rows().map(|p| nearest(p, &self.centroids).1).sum())
    }
}

/// Nearest-centroid ID for each row of `points`.
pub fn assign_nearest<T: Scalar, P: Scalar>(
    model: &KMeansLayerModel<T>,
    points: &Matrix<P>,
) -> Result<Vec<usize>> {
    if points.cols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: points.cols(),
        });
    }
    Ok(points
        .iter_rows()
        .map(|p| nearest(p, &model.centroids).0)
        .collect())
}
