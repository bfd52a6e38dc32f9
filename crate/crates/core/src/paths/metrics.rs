//! Path complexity, path agreement, weighted purity and coverage.

use super::path::ClusterPath;
use super::table::PathTable;
use crate::error::{Error, Result};

/// Product of per-layer cluster counts: the number of possible paths.
pub fn path_complexity(k_per_layer: &[usize]) -> Result<u128> {
    if k_per_layer.is_empty() {
        return Err(Error::EmptyInput("no layers".into()));
    }
    k_per_layer.iter().try_fold(1u128, |acc, &k| {
        if k == 0 {
            return Err(Error::InvalidParameter("cluster counts must be at least 1".into()));
        }
        acc.checked_mul(k as u128)
            .ok_or_else(|| Error::InvalidParameter("path complexity overflows u128".into()))
    })
}

/// Number of layers on which the two paths differ.
pub fn hamming_distance(p: &ClusterPath, q: &ClusterPath) -> Result<usize> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(format!(
            "paths of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(p.ids().iter().zip(q.ids()).filter(|(a, b)| a != b).count())
}

/// Fraction of layers whose cluster IDs coincide.
pub fn hamming_agreement(p: &ClusterPath, q: &ClusterPath) -> Result<f64> {
    let d = hamming_distance(p, q)?;
    if p.is_empty() {
        return Err(Error::EmptyInput("zero-length paths".into()));
    }
    Ok((p.len() - d) as f64 / p.len() as f64)
}

/// Mean per-sample agreement between reference and perturbed paths.
pub fn mean_path_agreement(reference: &[ClusterPath], perturbed: &[ClusterPath]) -> Result<f64> {
    if reference.len() != perturbed.len() {
        return Err(Error::LengthMismatch(format!(
            "{} reference paths vs {} perturbed paths",
            reference.len(),
            perturbed.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::EmptyInput("no paths to compare".into()));
    }
    let sum = reference
        .iter()
        .zip(perturbed)
        .map(|(p, q)| hamming_agreement(p, q))
        .sum::<Result<f64>>()?;
    Ok(sum / reference.len() as f64)
}

/// Size-weighted mean over paths of the dominant-class fraction.
pub fn weighted_purity(table: &PathTable) -> Result<f64> {
    if table.total() == 0 {
        return Err(Error::EmptyInput("path table is empty".into()));
    }
    if table.label_source().is_none() {
        return Err(Error::MissingLabelSource("labels or predictions"));
    }
    let dominant: usize = table
        .entries()
        .values()
        .map(|e| e.class_counts.values().copied().max().unwrap_or(0))
        .sum();
    Ok(dominant as f64 / table.total() as f64)
}

/// Cumulative fraction of samples covered by the `m` most frequent paths,
/// for `m = 1..=n_unique`.
pub fn coverage_curve(table: &PathTable) -> Vec<f64> {
    let n = table.total() as f64;
    let mut acc = 0usize;
    table
        .by_frequency()
        .into_iter()
        .map(|(_, e)| {
            acc += e.count;
            acc as f64 / n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::table::LabelSource;
    use proptest::prelude::*;

    fn p(ids: &[i32]) -> ClusterPath {
        ClusterPath::new(ids.to_vec())
    }

    #[test]
    fn complexity_examples() {
        assert_eq!(path_complexity(&[20, 20, 20, 100]).unwrap(), 800_000);
        assert_eq!(path_complexity(&[7]).unwrap(), 7);
        assert_eq!(path_complexity(&[2, 2, 2, 3]).unwrap(), 24);
        assert!(path_complexity(&[]).is_err());
        assert!(path_complexity(&[3, 0]).is_err());
    }

    #[test]
    fn agreement_examples() {
        assert_eq!(hamming_agreement(&p(&[2, 5, 1]), &p(&[2, 5, 1])).unwrap(), 1.0);
        assert_eq!(hamming_agreement(&p(&[2, 5, 1]), &p(&[2, 5, 3])).unwrap(), 2.0 / 3.0);
        assert_eq!(hamming_agreement(&p(&[0, 1, 2, 3]), &p(&[1, 2, 3, 0])).unwrap(), 0.0);
        assert!(hamming_agreement(&p(&[0]), &p(&[0, 1])).is_err());
    }

    #[test]
    fn mean_agreement_half() {
        let r = vec![p(&[0, 0, 0, 0]), p(&[1, 1, 1, 1])];
        let q = vec![p(&[1, 1, 1, 1]), p(&[1, 1, 1, 1])];
        assert_eq!(mean_path_agreement(&r, &q).unwrap(), 0.5);
        assert!(mean_path_agreement(&r, &q[..1]).is_err());
    }

    #[test]
    fn purity_examples() {
        let mut paths = vec![p(&[0]); 4572];
        let mut labels = vec![0i64; 4531];
        labels.extend(std::iter::repeat_n(1, 41));
        let t = PathTable::from_paths(&paths, Some((&labels, LabelSource::Labels))).unwrap();
        assert_eq!(weighted_purity(&t).unwrap(), 4531.0 / 4572.0);

        paths = vec![p(&[0]), p(&[0]), p(&[1]), p(&[1])];
        let t = PathTable::from_paths(&paths, Some((&[0, 1, 0, 1], LabelSource::Labels))).unwrap();
        assert_eq!(weighted_purity(&t).unwrap(), 0.5);
        let t = PathTable::from_paths(&paths, Some((&[0, 0, 1, 1], LabelSource::Labels))).unwrap();
        assert_eq!(weighted_purity(&t).unwrap(), 1.0);
    }

    #[test]
    fn purity_requires_labels() {
        let t = PathTable::from_paths(&[p(&[0])], None).unwrap();
        assert!(weighted_purity(&t).is_err());
        let empty = PathTable::from_paths(&[], Some((&[], LabelSource::Labels))).unwrap();
        assert!(weighted_purity(&empty).is_err());
    }

    #[test]
    fn coverage_single_path() {
        let t = PathTable::from_paths(&vec![p(&[0, 0]); 5], None).unwrap();
        assert_eq!(coverage_curve(&t), vec![1.0]);
    }

    fn arb_paths(len: usize) -> impl Strategy<Value = Vec<ClusterPath>> {
        prop::collection::vec(prop::collection::vec(0i32..3, len), 1..40)
            .prop_map(|v| v.into_iter().map(ClusterPath::new).collect())
    }

    proptest! {
        #[test]
        fn mean_agreement_matches_naive_loop(pairs in (1usize..6).prop_flat_map(|l| (arb_paths(l), arb_paths(l))).prop_filter("same count", |(a, b)| a.len() == b.len())) {
            let (a, b) = pairs;
            let mut total = 0.0;
            for i in 0..a.len() {
                let mut same = 0;
                for l in 0..a[i].len() {
                    if a[i].ids()[l] == b[i].ids()[l] { same += 1; }
                }
                total += same as f64 / a[i].len() as f64;
            }
            let naive = total / a.len() as f64;
            let got = mean_path_agreement(&a, &b).unwrap();
            prop_assert!((got - naive).abs() < 1e-15);
            prop_assert_eq!(got, mean_path_agreement(&b, &a).unwrap());
            prop_assert_eq!(mean_path_agreement(&a, &a).unwrap(), 1.0);
        }

        #[test]
        fn purity_invariant_under_class_relabeling(paths in arb_paths(2), seed in 0u64..1000) {
            let labels: Vec<i64> = (0..paths.len()).map(|i| ((i as u64 * 7 + seed) % 3) as i64).collect();
            let relabeled: Vec<i64> = labels.iter().map(|c| (c + 1) % 3 + 10).collect();
            let a = PathTable::from_paths(&paths, Some((&labels, LabelSource::Labels))).unwrap();
            let b = PathTable::from_paths(&paths, Some((&relabeled, LabelSource::Labels))).unwrap();
            let wa = weighted_purity(&a).unwrap();
            prop_assert_eq!(wa, weighted_purity(&b).unwrap());
            let all_pure = a.entries().values().all(|e| e.class_counts.len() == 1);
            prop_assert_eq!(wa == 1.0, all_pure);
            prop_assert!(wa > 0.0 && wa <= 1.0);
        }

        #[test]
        fn coverage_monotone_to_one(paths in arb_paths(3)) {
            let t = PathTable::from_paths(&paths, None).unwrap();
            let c = coverage_curve(&t);
            prop_assert_eq!(c.len(), t.n_unique());
            prop_assert!(c.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!((c.last().unwrap() - 1.0).abs() < 1e-12);
            prop_assert!(t.n_unique() as u128 <= path_complexity(&[3, 3, 3]).unwrap());
        }
    }
}
