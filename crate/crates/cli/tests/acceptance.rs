//! End-to-end acceptance checks. Each test prints one PASS/FAIL line and
//! fails if its criterion or its runtime budget is missed.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use clusterpath::clustering::{fit_gmm, fit_kmeans, GmmConfig, KMeansConfig};
use clusterpath::faithfulness::{daf_for_paths, one_hot_encode, DafConfig, EncodingMode};
use clusterpath::ood::{
    aupr, auroc, default_epsilon_grid, evaluate, fit_ood_index, fpr_at_95tpr, load_ood_index, save_ood_index,
    summarize, summarize_rows, tune_epsilon,
};
use clusterpath::paths::{
    build_path_table, coverage_curve, fit_path_model, hamming_agreement, load_path_model, mean_path_agreement,
    path_complexity, save_path_model, weighted_purity, ClusterPath, ClusteringSettings, LabelSource, PathTable,
};
use clusterpath::synth::{generate, generate_perturbed, CueMode, SynthSpec};
use clusterpath::{ActivationBundle, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: u32, title: &str, passed: bool, detail: &str, elapsed: Duration, budget_s: u64) {
    let in_time = elapsed.as_secs_f64() < budget_s as f64;
    let ok = passed && in_time;
    // Written straight to the stream so the line survives output capture.
    let _ = writeln!(
        std::io::stderr(),
        "[{}] criterion {id}: {title} | {detail} | {:.2}s of {budget_s}s",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    assert!(passed, "criterion {id} not met: {detail}");
    assert!(in_time, "criterion {id} over its {budget_s}s budget");
}

fn p(ids: &[i32]) -> ClusterPath {
    ClusterPath::new(ids.to_vec())
}

#[test]
fn criterion_1_unit_anchors() {
    let t = Instant::now();
    let omega = path_complexity(&[20, 20, 20, 100]).unwrap();
    let bits = one_hot_encode(&p(&[0, 2, 1]), &[3, 3, 3]).unwrap().bits;
    let mut labels = vec![0i64; 4531];
    labels.extend([1; 41]);
    let table = PathTable::from_paths(&vec![p(&[0]); 4572], Some((&labels, LabelSource::Labels))).unwrap();
    let purity = weighted_purity(&table).unwrap();
    let pa = hamming_agreement(&p(&[2, 5, 1]), &p(&[2, 5, 3])).unwrap();
    let passed = omega == 800_000
        && bits == [1, 0, 0, 0, 0, 1, 0, 1, 0]
        && purity == 4531.0 / 4572.0
        && pa == 2.0 / 3.0;
    verdict(
        1,
        "unit anchors",
        passed,
        &format!("omega={omega} one_hot={bits:?} purity={purity} agreement={pa}"),
        t.elapsed(),
        1,
    );
}

#[test]
fn criterion_2_spurious_cue_purity() {
    let t = Instant::now();
    let mut spec = SynthSpec::well_separated(5000, 2, vec![16, 8, 4], 0);
    spec.cue = CueMode::Correlated(0.9);
    let normal = generate(&spec).unwrap().bundle;
    let model = fit_path_model(&normal, &[2, 2, 2], &ClusteringSettings::default()).unwrap();
    let w_normal = weighted_purity(&build_path_table(&model, &normal, LabelSource::Labels).unwrap()).unwrap();

    let mut corrupted = spec.clone();
    corrupted.cue = CueMode::Randomized;
    corrupted.seed = 1;
    let corrupted = generate(&corrupted).unwrap().bundle;
    let w_corrupt = weighted_purity(&build_path_table(&model, &corrupted, LabelSource::Labels).unwrap()).unwrap();
    verdict(
        2,
        "spurious-cue purity",
        w_normal >= 0.90 && w_corrupt <= 0.60,
        &format!("purity correlated={w_normal:.4} (>=0.90) randomized={w_corrupt:.4} (<=0.60)"),
        t.elapsed(),
        30,
    );
}

#[test]
fn criterion_3_faithfulness() {
    let t = Instant::now();
    let cfg = DafConfig::default();

    let final_blob = generate(&SynthSpec::well_separated(2000, 3, vec![8, 8, 8], 2)).unwrap().bundle;
    let m = fit_path_model(&final_blob, &[3, 3, 3], &ClusteringSettings::default()).unwrap();
    let paths = m.generate_paths(&final_blob).unwrap();
    let daf = daf_for_paths(&paths, &[3, 3, 3], final_blob.predictions(), EncodingMode::FullPath, &cfg).unwrap();

    let mut spec = SynthSpec::well_separated(2000, 2, vec![8, 8, 8], 3);
    spec.blobs_per_layer = vec![2, 4, 2];
    spec.intermediate_signal = true;
    let mid = generate(&spec).unwrap().bundle;
    let k = [2, 4, 2];
    let m = fit_path_model(&mid, &k, &ClusteringSettings::default()).unwrap();
    let paths = m.generate_paths(&mid).unwrap();
    let full = daf_for_paths(&paths, &k, mid.predictions(), EncodingMode::FullPath, &cfg).unwrap();
    let last = daf_for_paths(&paths, &k, mid.predictions(), EncodingMode::FinalLayerOnly, &cfg).unwrap();
    let gain = full.daf - last.daf;
    verdict(
        3,
        "decision-alignment faithfulness",
        daf.daf >= 0.99 && gain >= 0.05,
        &format!(
            "final-blob DAF={:.4} (>=0.99); intermediate signal full={:.4} final-only={:.4} gain={gain:.4} (>=0.05)",
            daf.daf, full.daf, last.daf
        ),
        t.elapsed(),
        60,
    );
}

#[test]
fn criterion_4_agreement_under_noise() {
    let t = Instant::now();
    let mut spec = SynthSpec::well_separated(2000, 5, vec![2; 4], 4);
    spec.sigma_between = spec.sigma_within;
    let s = spec.sigma_within;
    let b = generate(&spec).unwrap().bundle;
    let m = fit_path_model(&b, &[5; 4], &ClusteringSettings::default()).unwrap();
    let reference = m.generate_paths(&b).unwrap();
    let grid = [0.0, 0.1 * s, 0.25 * s, 0.5 * s, s, 2.0 * s];
    let pa: Vec<f64> = grid
        .iter()
        .map(|&sigma| {
            let q = m.generate_paths(&generate_perturbed(&b, sigma, 7).unwrap()).unwrap();
            mean_path_agreement(&reference, &q).unwrap()
        })
        .collect();
    let monotone = pa.windows(2).all(|w| w[1] <= w[0] + 0.02);
    verdict(
        4,
        "path agreement under noise",
        pa[0] == 1.0 && monotone && pa[5] <= 0.6,
        &format!("PA over sigma/s {{0,0.1,0.25,0.5,1,2}} = {pa:.4?}"),
        t.elapsed(),
        60,
    );
}

/// Minimum inertia over every assignment of points to at most k non-empty
/// clusters, each centered at its mean.
fn exhaustive_inertia(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut used = vec![false; k];
        for &l in &labels {
            used[l] = true;
        }
        if used.iter().all(|&u| u) {
            let mut total = 0.0;
            for c in 0..k {
                let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
                let mut mean = vec![0.0; d];
                for m in &members {
                    for j in 0..d {
                        mean[j] += m[j] / members.len() as f64;
                    }
                }
                for m in &members {
                    total += (0..d).map(|j| (m[j] - mean[j]).powi(2)).sum::<f64>();
                }
            }
            best = best.min(total);
        }
        // next assignment in base k
        let mut i = 0;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

#[test]
fn criterion_5_clustering_oracles() {
    let t = Instant::now();
    let mut matched = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(4..=12);
        let k = rng.random_range(1..=3);
        let d = rng.random_range(1..=3);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let model = fit_kmeans(&Matrix::from_rows(&pts).unwrap(), &KMeansConfig::new(k).with_seed(seed)).unwrap();
        let opt = exhaustive_inertia(&pts, k);
        if (model.inertia - opt).abs() <= 1e-6 * opt.max(f64::MIN_POSITIVE) {
            matched += 1;
        }
    }

    let mut fits = 0;
    let mut monotone = true;
    for seed in 0..20u64 {
        let b = generate(&SynthSpec::well_separated(400, 3, vec![6, 4], seed)).unwrap().bundle;
        for layer in b.layers() {
            for k in 1..=4 {
                for data in [summarize_rows(&layer.data).unwrap(), layer.data.cast()] {
                    let g = fit_gmm(&data, &GmmConfig::new(k).with_seed(seed)).unwrap();
                    fits += 1;
                    monotone &= g.log_likelihood_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs());
                }
            }
        }
    }
    verdict(
        5,
        "clustering oracles",
        matched >= 95 && monotone,
        &format!("k-means optimal on {matched}/100 (>=95); EM monotone on all {fits} fits: {monotone}"),
        t.elapsed(),
        120,
    );
}

#[test]
fn criterion_6_ood_detection() {
    let t = Instant::now();
    let bundle = |seed: u64, shift: Option<f64>| -> ActivationBundle {
        let mut s = SynthSpec::well_separated(2000, 3, vec![16, 8, 4], seed);
        s.center_seed = 100;
        s.shift = shift.map(|v| vec![v * s.sigma_within; 3]);
        generate(&s).unwrap().bundle
    };
    let train = bundle(1, None);
    let held_out = bundle(2, None);
    let inliers = bundle(3, None);
    let fresh = bundle(4, None);
    let outliers = bundle(5, Some(10.0));

    let rho = 0.05;
    let index = fit_ood_index(&train, &[3, 3, 3], rho, 0.0, &GmmConfig::new(1)).unwrap();
    let rarities: Vec<f64> = index.score_bundle(&held_out).unwrap().iter().map(|s| s.rarity).collect();
    let (index, tuned) = match tune_epsilon(&rarities, &default_epsilon_grid(), 0.05) {
        Ok(tu) => (index.with_epsilon(tu.epsilon).unwrap(), format!("epsilon={}", tu.epsilon)),
        Err(e) => (index, format!("epsilon untuned ({e})")),
    };
    let monotone = index
        .layer_gmms
        .iter()
        .all(|g| g.log_likelihood_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()));
    let shifted = evaluate(&index, &inliers, &outliers).unwrap();
    let same = evaluate(&index, &inliers, &fresh).unwrap();
    let passed = shifted.auroc >= 0.95
        && shifted.fpr_at_95tpr <= 0.20
        && (0.45..=0.55).contains(&same.auroc)
        && monotone;
    verdict(
        6,
        "OOD detection",
        passed,
        &format!(
            "shifted AUROC={:.4} (>=0.95) FPR@95TPR={:.4} (<=0.20) AUPR={:.4}; fresh-inlier AUROC={:.4} ([0.45,0.55]); \
             inlier flag rate={:.4}; {tuned}",
            shifted.auroc, shifted.fpr_at_95tpr, shifted.aupr, same.auroc, shifted.inlier_flag_rate
        ),
        t.elapsed(),
        120,
    );
}

fn pairwise_auroc(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in a {
        for &y in b {
            s += if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 };
        }
    }
    s / (a.len() * b.len()) as f64
}

fn distinct_desc(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = a.iter().chain(b).copied().collect();
    t.sort_by(|x, y| y.total_cmp(x));
    t.dedup();
    t
}

fn threshold_aupr(a: &[f64], b: &[f64]) -> f64 {
    let mut area = 0.0;
    let mut prev = 0.0;
    for th in distinct_desc(a, b) {
        let tp = a.iter().filter(|&&x| x >= th).count() as f64;
        let fp = b.iter().filter(|&&x| x >= th).count() as f64;
        let r = tp / a.len() as f64;
        area += (r - prev) * tp / (tp + fp);
        prev = r;
    }
    area
}

fn threshold_fpr(a: &[f64], b: &[f64]) -> f64 {
    for th in distinct_desc(a, b) {
        let tpr = a.iter().filter(|&&x| x >= th).count() as f64 / a.len() as f64;
        if tpr >= 0.95 {
            return b.iter().filter(|&&x| x >= th).count() as f64 / b.len() as f64;
        }
    }
    1.0
}

/// Moments from pairwise differences and raw power sums.
fn moments_oracle(v: &[f64]) -> [f64; 6] {
    let d = v.len() as f64;
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    let mean = v.iter().sum::<f64>() / d;
    let mut pair = 0.0;
    for x in v {
        for y in v {
            pair += (x - y) * (x - y);
        }
    }
    let var = pair / (2.0 * d * d);
    let s2 = v.iter().map(|x| x * x).sum::<f64>() / d;
    let s3 = v.iter().map(|x| x * x * x).sum::<f64>() / d;
    let m3 = s3 - 3.0 * mean * s2 + 2.0 * mean.powi(3);
    let skew = if var == 0.0 { 0.0 } else { m3 / var.powf(1.5) };
    [max, mean, var, skew, min, (s2 * d).sqrt()]
}

#[test]
fn criterion_7_metric_oracles() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_curve = 0.0f64;
    let mut fpr_exact = true;
    for _ in 0..100 {
        let na = rng.random_range(1..=50);
        let nb = rng.random_range(1..=50);
        // coarse values so ties are common
        let levels = rng.random_range(2..20);
        let mut draw = |n| -> Vec<f64> { (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect() };
        let (a, b) = (draw(na), draw(nb));
        worst_curve = worst_curve
            .max((auroc(&a, &b).unwrap() - pairwise_auroc(&a, &b)).abs())
            .max((aupr(&a, &b).unwrap() - threshold_aupr(&a, &b)).abs());
        fpr_exact &= fpr_at_95tpr(&a, &b).unwrap() == threshold_fpr(&a, &b);
    }
    let mut worst_summary = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=64);
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = summarize(&v).unwrap().to_array();
        for (g, o) in got.iter().zip(moments_oracle(&v)) {
            worst_summary = worst_summary.max((g - o).abs() / o.abs().max(1.0));
        }
    }
    verdict(
        7,
        "metric oracles",
        worst_curve <= 1e-12 && fpr_exact && worst_summary <= 1e-12,
        &format!("max |AUROC/AUPR - oracle|={worst_curve:.2e}; FPR exact: {fpr_exact}; summary rel err={worst_summary:.2e}"),
        t.elapsed(),
        10,
    );
}

fn cli(args: &[&str], cwd: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_clusterpath"))
        .args(args)
        .env("RUST_LOG", "warn")
        .current_dir(cwd)
        .status()
        .unwrap()
        .success()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn criterion_8_determinism_and_persistence() {
    let t = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let runs: [&[&str]; 4] = [
        &["synth", "--n", "800", "--classes", "3", "--dims", "12,6,4", "--seed", "3", "--out", "OUT"],
        &["fit", "--bundle", "data", "--k", "3,3,4", "--seed", "5", "--out", "OUT"],
        &["ood-fit", "--bundle", "data", "--k", "3", "--rho", "0.05", "--epsilon", "0.01", "--out", "OUT"],
        &["perturb", "--bundle", "data", "--sigma", "0.3", "--seed", "2", "--out", "OUT"],
    ];
    assert!(cli(&["synth", "--n", "800", "--classes", "3", "--dims", "12,6,4", "--seed", "3", "--out", "data"], root));
    let mut identical = 0;
    for (i, args) in runs.iter().enumerate() {
        // the report echoes --out, so both runs write to the same place
        let out = format!("run{i}");
        let a: Vec<&str> = args.iter().map(|&s| if s == "OUT" { out.as_str() } else { s }).collect();
        let mut outs = Vec::new();
        for _ in 0..2 {
            let _ = fs::remove_dir_all(root.join(&out));
            assert!(cli(&a, root), "{a:?}");
            outs.push(dir_bytes(&root.join(&out)));
        }
        if outs[0] == outs[1] {
            identical += 1;
        }
    }

    let data = clusterpath::load_bundle(&root.join("data")).unwrap();
    let probe = clusterpath::load_bundle(&root.join("run3")).unwrap();
    let model = fit_path_model(&data, &[3, 3, 4], &ClusteringSettings::default()).unwrap();
    save_path_model(&model, &root.join("m")).unwrap();
    let model_back = load_path_model::<f32>(&root.join("m")).unwrap();
    let same_paths = model_back.generate_paths(&probe).unwrap() == model.generate_paths(&probe).unwrap();
    let index = fit_ood_index(&data, &[3, 3, 3], 0.05, 0.01, &GmmConfig::new(1)).unwrap();
    save_ood_index(&index, &root.join("i")).unwrap();
    let index_back = load_ood_index(&root.join("i")).unwrap();
    let same_scores = index_back.score_bundle(&probe).unwrap() == index.score_bundle(&probe).unwrap();
    verdict(
        8,
        "determinism and persistence",
        identical == runs.len() && same_paths && same_scores,
        &format!(
            "byte-identical reruns {identical}/{}; reloaded path model identical: {same_paths}; reloaded index identical: {same_scores}",
            runs.len()
        ),
        t.elapsed(),
        30,
    );
}

#[test]
fn criterion_9_coverage_curve() {
    let t = Instant::now();
    let mut spec = SynthSpec::well_separated(3000, 4, vec![10, 8, 6, 4], 9);
    spec.blobs_per_layer = vec![4, 3, 4, 2];
    let out = generate(&spec).unwrap();
    let k = spec.blobs_per_layer.clone();
    let model = fit_path_model(&out.bundle, &k, &ClusteringSettings::default()).unwrap();
    let table = build_path_table(&model, &out.bundle, LabelSource::Labels).unwrap();
    let planted = out.plant.chain_counts().len();
    let curve = coverage_curve(&table);
    let non_decreasing = curve.windows(2).all(|w| w[1] >= w[0]);
    let ends_at_one = curve.last().is_some_and(|&c| (c - 1.0).abs() < 1e-12);
    verdict(
        9,
        "coverage curve",
        table.n_unique() == planted && non_decreasing && ends_at_one,
        &format!("unique paths={} planted={planted}; curve={curve:.4?}", table.n_unique()),
        t.elapsed(),
        10,
    );
}
