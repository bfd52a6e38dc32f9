//! Dense Cholesky factorization for small symmetric positive-definite matrices.

#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    /// Lower-triangular factor, row-major n x n.
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors row-major `a` (n x n). Returns `None` if `a` is not positive-definite.
    pub fn new(a: &[f64], n: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for p in 0..j {
                    s -= l[i * n + p] * l[j * n + p];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, lower: l })
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.lower[i * self.n + i].ln()).sum::<f64>()
    }

    /// `v^T A^{-1} v` via forward substitution.
    pub fn mahalanobis_sq(&self, v: &[f64]) -> f64 {
        let n = self.n;
        let mut z = [0.0f64; 16];
        let mut heap;
        let z: &mut [f64] = if n <= z.len() {
            &mut z[..n]
        } else {
            heap = vec![0.0; n];
            &mut heap
        };
        let mut acc = 0.0;
        for i in 0..n {
            let mut s = v[i];
            for p in 0..i {
                s -= self.lower[i * n + p] * z[p];
            }
            z[i] = s / self.lower[i * n + i];
            acc += z[i] * z[i];
        }
        acc
    }
}
