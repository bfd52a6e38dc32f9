//! Full-covariance Gaussian mixtures fitted by EM, with per-component
//! log-density floors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::kmeans::{assign_nearest, fit_kmeans, KMeansConfig};
use super::linalg::Cholesky;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::stats::{argmax, log_sum_exp, percentile_sorted};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop when the relative log-likelihood improvement drops below this.
    pub tol: f64,
    /// Added to every covariance diagonal at initialization and each M-step.
    pub reg: f64,
    pub seed: u64,
    /// Restarts of the k-means run that initializes EM.
    pub init_restarts: usize,
}

impl GmmConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iter: 300,
            tol: 1e-6,
            reg: 1e-6,
            seed: 0,
            init_restarts: 10,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ComponentCache {
    mean: Vec<f64>,
    chol: Cholesky,
    /// ln(pi_k) - (d ln(2 pi) + ln|Sigma_k|) / 2
    log_norm: f64,
}

/// A fitted mixture. Parameters are stored in `T`; densities are evaluated
/// in f64 from a factorization cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmLayerModel<T> {
    pub weights: Vec<T>,
    pub means: Matrix<T>,
    /// One `dim x dim` matrix per component.
    pub covariances: Vec<Matrix<T>>,
    /// Per-component log-density floors, once calibrated.
    pub floors: Option<Vec<f64>>,
    pub rho: Option<f64>,
    pub config: GmmConfig,
    pub iterations_run: usize,
    pub log_likelihood_trace: Vec<f64>,
    cache: Vec<ComponentCache>,
}

fn build_cache(weights: &[f64], means: &[Vec<f64>], covs: &[Vec<f64>], dim: usize) -> Result<Vec<ComponentCache>> {
    let base = dim as f64 * (2.0 * PI).ln();
    weights
        .iter()
        .zip(means)
        .zip(covs)
        .enumerate()
        .map(|(component, ((&w, mean), cov))| {
            let chol = Cholesky::new(cov, dim).ok_or(Error::SingularCovariance { component })?;
            let log_norm = w.ln() - 0.5 * (base + chol.log_det());
            Ok(ComponentCache {
                mean: mean.clone(),
                chol,
                log_norm,
            })
        })
        .collect()
}

impl<T: Scalar> GmmLayerModel<T> {
    /// Assembles a model from explicit parameters, validating shapes and
    /// positive-definiteness.
    pub fn from_parts(
        weights: Vec<T>,
        means: Matrix<T>,
        covariances: Vec<Matrix<T>>,
        config: GmmConfig,
    ) -> Result<Self> {
        let k = weights.len();
        let dim = means.cols();
        if k == 0 {
            return Err(Error::EmptyInput("mixture needs at least one component".into()));
        }
        if means.rows() != k || covariances.len() != k {
            return Err(Error::LengthMismatch(format!(
                "{k} weights, {} means, {} covariances",
                means.rows(),
                covariances.len()
            )));
        }
        for c in &covariances {
            if c.rows() != dim || c.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.rows().max(c.cols()),
                });
            }
        }
        let w64: Vec<f64> = weights.iter().map(|w| w.as_f64()).collect();
        let m64: Vec<Vec<f64>> = means
            .iter_rows()
            .map(|r| r.iter().map(|v| v.as_f64()).collect())
            .collect();
        let c64: Vec<Vec<f64>> = covariances
            .iter()
            .map(|c| c.as_slice().iter().map(|v| v.as_f64()).collect())
            .collect();
        let cache = build_cache(&w64, &m64, &c64, dim)?;
        Ok(Self {
            weights,
            means,
            covariances,
            floors: None,
            rho: None,
            config: GmmConfig { k, ..config },
            iterations_run: 0,
            log_likelihood_trace: Vec::new(),
            cache,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.cols()
    }

    fn check_dim<P>(&self, point: &[P]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: point.len(),
            });
        }
        Ok(())
    }

    /// `ln pi_k + ln N(x | mu_k, Sigma_k)` for every component.
    pub fn weighted_log_densities<P: Scalar>(&self, point: &[P]) -> Result<Vec<f64>> {
        self.check_dim(point)?;
        let x: Vec<f64> = point.iter().map(|v| v.as_f64()).collect();
        Ok(self.weighted_log_densities_f64(&x))
    }

    fn weighted_log_densities_f64(&self, x: &[f64]) -> Vec<f64> {
        let mut diff = vec![0.0; x.len()];
        self.cache
            .iter()
            .map(|c| {
                for ((d, xi), mi) in diff.iter_mut().zip(x).zip(&c.mean) {
                    *d = xi - mi;
                }
                c.log_norm - 0.5 * c.chol.mahalanobis_sq(&diff)
            })
            .collect()
    }

    /// Log of the mixture density at `point`.
    pub fn log_density<P: Scalar>(&self, point: &[P]) -> Result<f64> {
        Ok(log_sum_exp(&self.weighted_log_densities(point)?))
    }

    /// Component with the highest posterior responsibility; ties to the lowest index.
    pub fn responsibility_argmax<P: Scalar>(&self, point: &[P]) -> Result<usize> {
        Ok(argmax(&self.weighted_log_densities(point)?))
    }

    /// Argmax component and mixture log-density in one pass.
    pub fn classify<P: Scalar>(&self, point: &[P]) -> Result<(usize, f64)> {
        let lp = self.weighted_log_densities(point)?;
        Ok((argmax(&lp), log_sum_exp(&lp)))
    }

    /// Squared Mahalanobis distance from `point` to component `k`'s mean.
    pub fn mahalanobis_sq<P: Scalar>(&self, point: &[P], k: usize) -> Result<f64> {
        self.check_dim(point)?;
        let c = &self.cache[k];
        let diff: Vec<f64> = point.iter().zip(&c.mean).map(|(x, m)| x.as_f64() - m).collect();
        Ok(c.chol.mahalanobis_sq(&diff))
    }
}

/// Convenience wrapper for [`GmmLayerModel::log_density`].
pub fn gmm_log_density<T: Scalar, P: Scalar>(model: &GmmLayerModel<T>, point: &[P]) -> Result<f64> {
    model.log_density(point)
}

/// Convenience wrapper for [`GmmLayerModel::responsibility_argmax`].
pub fn gmm_responsibility_argmax<T: Scalar, P: Scalar>(model: &GmmLayerModel<T>, point: &[P]) -> Result<usize> {
    model.responsibility_argmax(point)
}

struct Params {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covs: Vec<Vec<f64>>,
}

fn e_step(cache: &[ComponentCache], x: &[Vec<f64>], resp: &mut [Vec<f64>]) -> f64 {
    let dim = x.first().map_or(0, Vec::len);
    let mut diff = vec![0.0; dim];
    let mut ll = 0.0;
    for (xi, ri) in x.iter().zip(resp.iter_mut()) {
        for (k, c) in cache.iter().enumerate() {
            for ((d, a), m) in diff.iter_mut().zip(xi).zip(&c.mean) {
                *d = a - m;
            }
            ri[k] = c.log_norm - 0.5 * c.chol.mahalanobis_sq(&diff);
        }
        let lse = log_sum_exp(ri);
        for r in ri.iter_mut() {
            *r = (*r - lse).exp();
        }
        ll += lse;
    }
    ll
}

fn m_step(x: &[Vec<f64>], resp: &[Vec<f64>], k: usize, reg: f64) -> Result<Params> {
    let n = x.len();
    let dim = x[0].len();
    let mut nk = vec![0.0; k];
    let mut means = vec![vec![0.0; dim]; k];
    for (xi, ri) in x.iter().zip(resp) {
        for j in 0..k {
            nk[j] += ri[j];
            for (m, v) in means[j].iter_mut().zip(xi) {
                *m += ri[j] * v;
            }
        }
    }
    for (component, (&w, m)) in nk.iter().zip(means.iter_mut()).enumerate() {
        if !(w > f64::MIN_POSITIVE) {
            return Err(Error::EmptyComponent { component });
        }
        m.iter_mut().for_each(|v| *v /= w);
    }
    let mut covs = vec![vec![0.0; dim * dim]; k];
    let mut diff = vec![0.0; dim];
    for (xi, ri) in x.iter().zip(resp) {
        for j in 0..k {
            for ((d, a), m) in diff.iter_mut().zip(xi).zip(&means[j]) {
                *d = a - m;
            }
            let cov = &mut covs[j];
            for a in 0..dim {
                let ra = ri[j] * diff[a];
                for b in 0..=a {
                    cov[a * dim + b] += ra * diff[b];
                }
            }
        }
    }
    for (cov, &w) in covs.iter_mut().zip(&nk) {
        for a in 0..dim {
            for b in 0..=a {
                let v = cov[a * dim + b] / w;
                cov[a * dim + b] = v;
                cov[b * dim + a] = v;
            }
            cov[a * dim + a] += reg;
        }
    }
    let weights = nk.iter().map(|w| w / n as f64).collect();
    Ok(Params { weights, means, covs })
}

fn kmeans_init(x: &Matrix<f64>, config: &GmmConfig) -> Result<Params> {
    let km = fit_kmeans(
        x,
        &KMeansConfig {
            k: config.k,
            restarts: config.init_restarts,
            max_iter: 300,
            tol: 1e-6,
            seed: config.seed,
        },
    )?;
    let labels = assign_nearest(&km, x)?;
    let resp: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| {
            let mut r = vec![0.0; config.k];
            r[l] = 1.0;
            r
        })
        .collect();
    let rows: Vec<Vec<f64>> = x.iter_rows().map(<[f64]>::to_vec).collect();
    m_step(&rows, &resp, config.k, config.reg)
}

/// Fits a full-covariance mixture by EM, initialized from a seeded k-means run.
pub fn fit_gmm<T: Scalar>(points: &Matrix<T>, config: &GmmConfig) -> Result<GmmLayerModel<T>> {
    let n = points.rows();
    if config.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if config.k > n {
        return Err(Error::TooManyClusters { k: config.k, n });
    }
    if !(config.reg >= 0.0) {
        return Err(Error::InvalidParameter("reg must be non-negative".into()));
    }
    if let Some((row, col)) = points.find_non_finite() {
        return Err(Error::NonFiniteInput { row, col });
    }
    let dim = points.cols();
    let x64: Matrix<f64> = points.cast();
    let rows: Vec<Vec<f64>> = x64.iter_rows().map(<[f64]>::to_vec).collect();

    let mut params = kmeans_init(&x64, config)?;
    let cache = build_cache(&params.weights, &params.means, &params.covs, dim)?;
    let mut resp = vec![vec![0.0; config.k]; n];
    let mut ll = e_step(&cache, &rows, &mut resp);
    let mut trace = vec![ll];
    let mut iterations = 0;

    while iterations < config.max_iter {
        let candidate = m_step(&rows, &resp, config.k, config.reg)?;
        let candidate_cache = build_cache(&candidate.weights, &candidate.means, &candidate.covs, dim)?;
        let mut candidate_resp = resp.clone();
        let next = e_step(&candidate_cache, &rows, &mut candidate_resp);
        // the ridge makes the M-step inexact; keep the last accepted iterate
        if next < ll {
            break;
        }
        params = candidate;
        resp = candidate_resp;
        trace.push(next);
        iterations += 1;
        let improvement = (next - ll) / ll.abs().max(f64::MIN_POSITIVE);
        ll = next;
        if improvement < config.tol {
            break;
        }
    }

    let to_t = |v: &[f64]| v.iter().map(|&x| T::from_f64_lossy(x)).collect::<Vec<T>>();
    let means = Matrix::from_vec(config.k, dim, params.means.iter().flat_map(|m| to_t(m)).collect())?;
    let covariances = params
        .covs
        .iter()
        .map(|c| Matrix::from_vec(dim, dim, to_t(c)))
        .collect::<Result<Vec<_>>>()?;
    let mut model = GmmLayerModel::from_parts(to_t(&params.weights), means, covariances, *config)?;
    model.iterations_run = iterations;
    model.log_likelihood_trace = trace;
    Ok(model)
}

/// Sets each component's floor to the `rho` percentile (linear interpolation)
/// of the mixture log-densities of training points whose argmax component it is.
pub fn calibrate_floors<T: Scalar, P: Scalar>(
    model: &GmmLayerModel<T>,
    training_points: &Matrix<P>,
    rho: f64,
) -> Result<GmmLayerModel<T>> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho must lie in [0, 1], got {rho}")));
    }
    let mut per_component: Vec<Vec<f64>> = vec![Vec::new(); model.k()];
    for p in training_points.iter_rows() {
        let (c, ld) = model.classify(p)?;
        per_component[c].push(ld);
    }
    let floors = per_component
        .iter_mut()
        .enumerate()
        .map(|(component, v)| {
            v.sort_by(f64::total_cmp);
            percentile_sorted(v, rho).ok_or(Error::EmptyComponent { component })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = model.clone();
    out.floors = Some(floors);
    out.rho = Some(rho);
    Ok(out)
}
