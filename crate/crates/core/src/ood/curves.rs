//! Detector curves. Inliers are the positive class and a higher score means
//! more in-distribution.

use crate::error::{Error, Result};

fn check(inliers: &[f64], outliers: &[f64]) -> Result<()> {
    if inliers.is_empty() || outliers.is_empty() {
        return Err(Error::EmptyInput("score lists must be non-empty".into()));
    }
    if inliers.iter().chain(outliers).any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("scores contain NaN".into()));
    }
    Ok(())
}

/// Cumulative (TP, FP) counts at each distinct threshold, strictest first.
/// A sample is predicted inlier when its score is >= the threshold.
fn sweep(inliers: &[f64], outliers: &[f64]) -> Vec<(f64, usize, usize)> {
    let mut all: Vec<(f64, bool)> = inliers
        .iter()
        .map(|&s| (s, true))
        .chain(outliers.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < all.len() {
        let t = all[i].0;
        while i < all.len() && all[i].0 == t {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push((t, tp, fp));
    }
    out
}

/// P(inlier > outlier) + P(tie) / 2, via midranks.
pub fn auroc(inliers: &[f64], outliers: &[f64]) -> Result<f64> {
    check(inliers, outliers)?;
    let mut all: Vec<(f64, bool)> = inliers
        .iter()
        .map(|&s| (s, true))
        .chain(outliers.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1..=j share their mean
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * all[i..j].iter().filter(|x| x.1).count() as f64;
        i = j;
    }
    let (p, n) = (inliers.len() as f64, outliers.len() as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Step-wise area under the precision-recall curve.
pub fn aupr(inliers: &[f64], outliers: &[f64]) -> Result<f64> {
    check(inliers, outliers)?;
    let p = inliers.len() as f64;
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for (_, tp, fp) in sweep(inliers, outliers) {
        let recall = tp as f64 / p;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

/// False-positive rate at the strictest threshold whose TPR reaches 95%.
pub fn fpr_at_95tpr(inliers: &[f64], outliers: &[f64]) -> Result<f64> {
    check(inliers, outliers)?;
    let n_in = inliers.len();
    for (_, tp, fp) in sweep(inliers, outliers) {
        // tp / n_in >= 0.95 in integers
        if tp * 20 >= n_in * 19 {
            return Ok(fp as f64 / outliers.len() as f64);
        }
    }
    unreachable!("the most permissive threshold admits every inlier")
}

/// (FPR, TPR) at each distinct threshold, strictest first, starting at (0, 0).
pub fn roc_points(inliers: &[f64], outliers: &[f64]) -> Result<Vec<(f64, f64)>> {
    check(inliers, outliers)?;
    let (p, n) = (inliers.len() as f64, outliers.len() as f64);
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(sweep(inliers, outliers).into_iter().map(|(_, tp, fp)| (fp as f64 / n, tp as f64 / p)));
    Ok(pts)
}
