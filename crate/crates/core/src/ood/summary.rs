use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Field order of the summary, frozen into persisted artifacts.
pub const SUMMARY_FIELDS: [&str; 6] = ["max", "mean", "variance", "skewness", "min", "l2_norm"];

/// Six statistics of one layer's activation vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryVector {
    pub max: f64,
    pub mean: f64,
    /// Population variance (divides by d).
    pub variance: f64,
    /// Fisher-Pearson g1; 0 for constant vectors.
    pub skewness: f64,
    pub min: f64,
    pub l2_norm: f64,
}

impl SummaryVector {
    pub fn to_array(&self) -> [f64; 6] {
        [self.max, self.mean, self.variance, self.skewness, self.min, self.l2_norm]
    }
}

pub fn summarize<T: Scalar>(activation: &[T]) -> Result<SummaryVector> {
    if activation.is_empty() {
        return Err(Error::EmptyInput("cannot summarize an empty vector".into()));
    }
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for (col, v) in activation.iter().enumerate() {
        let v = v.as_f64();
        if !v.is_finite() {
            return Err(Error::NonFiniteInput { row: 0, col });
        }
        max = max.max(v);
        min = min.min(v);
        sum += v;
        sq += v * v;
    }
    let d = activation.len() as f64;
    let l2_norm = sq.sqrt();
    if max == min {
        return Ok(SummaryVector {
            max,
            mean: max,
            variance: 0.0,
            skewness: 0.0,
            min,
            l2_norm,
        });
    }
    let mean = (sum / d).clamp(min, max);
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in activation {
        let c = v.as_f64() - mean;
        m2 += c * c;
        m3 += c * c * c;
    }
    m2 /= d;
    m3 /= d;
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    Ok(SummaryVector {
        max,
        mean,
        variance: m2,
        skewness,
        min,
        l2_norm,
    })
}

/// One six-column summary row per activation row.
pub fn summarize_rows<T: Scalar>(activations: &Matrix<T>) -> Result<Matrix<f64>> {
    let mut data = Vec::with_capacity(activations.rows() * 6);
    for (row, r) in activations.iter_rows().enumerate() {
        let s = summarize(r).map_err(|e| match e {
            Error::NonFiniteInput { col, .. } => Error::NonFiniteInput { row, col },
            e => e,
        })?;
        data.extend(s.to_array());
    }
    Matrix::from_vec(activations.rows(), 6, data)
}
