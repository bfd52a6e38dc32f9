use std::fs;
use std::path::Path;

use clusterpath::clustering::GmmConfig;
use clusterpath::ood::{fit_ood_index, load_ood_index, save_ood_index};
use clusterpath::paths::{fit_path_model, fit_path_model_layers, load_path_model, save_path_model, ClusteringSettings};
use clusterpath::synth::{generate, SynthSpec};
use clusterpath::{load_bundle, save_bundle, ActivationBundle, MatrixF64};

fn bundle(seed: u64) -> ActivationBundle {
    let mut spec = SynthSpec::well_separated(300, 3, vec![7, 5, 3], seed);
    spec.center_seed = 11;
    generate(&spec).unwrap().bundle
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
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
fn bundle_round_trip_through_disk() {
    let b = bundle(1);
    let tmp = tempfile::tempdir().unwrap();
    save_bundle(&b, tmp.path()).unwrap();
    assert_eq!(load_bundle(tmp.path()).unwrap(), b);
}

#[test]
fn path_model_reload_reproduces_assignments() {
    let b = bundle(2);
    let probe = bundle(3);
    let m = fit_path_model(&b, &[3, 3, 3], &ClusteringSettings::default()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    save_path_model(&m, tmp.path()).unwrap();
    let back = load_path_model::<f32>(tmp.path()).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.generate_paths(&probe).unwrap(), m.generate_paths(&probe).unwrap());
    assert!(load_path_model::<f64>(tmp.path()).is_err());
}

#[test]
fn f64_path_model_round_trip() {
    let b = bundle(4);
    let data: Vec<MatrixF64> = b.layers().iter().map(|l| l.data.cast()).collect();
    let named: Vec<(&str, &MatrixF64)> = vec![("a", &data[0]), ("b", &data[1]), ("c", &data[2])];
    let m = fit_path_model_layers(&named, &[3, 2, 3], &ClusteringSettings::default()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    save_path_model(&m, tmp.path()).unwrap();
    let back = load_path_model::<f64>(tmp.path()).unwrap();
    assert_eq!(back.generate_paths(&b).unwrap(), m.generate_paths(&b).unwrap());
}

#[test]
fn repeated_fits_write_identical_bytes() {
    let b = bundle(5);
    let (a, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [a.path(), c.path()] {
        let m = fit_path_model(&b, &[3, 3, 3], &ClusteringSettings::default()).unwrap();
        save_path_model(&m, &d.join("model")).unwrap();
        let idx = fit_ood_index(&b, &[3, 3, 3], 0.05, 0.01, &GmmConfig::new(1)).unwrap();
        save_ood_index(&idx, &d.join("index")).unwrap();
    }
    assert_eq!(dir_bytes(&a.path().join("model")), dir_bytes(&c.path().join("model")));
    assert_eq!(dir_bytes(&a.path().join("index")), dir_bytes(&c.path().join("index")));
}

#[test]
fn ood_index_reload_reproduces_scores() {
    let b = bundle(6);
    let probe = bundle(7);
    let idx = fit_ood_index(&b, &[3, 3, 3], 0.05, 0.02, &GmmConfig::new(1)).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    save_ood_index(&idx, tmp.path()).unwrap();
    let back = load_ood_index(tmp.path()).unwrap();
    assert_eq!(back.epsilon, 0.02);
    assert_eq!(back.rho, 0.05);
    assert_eq!(back.score_bundle(&probe).unwrap(), idx.score_bundle(&probe).unwrap());
}

#[test]
fn corrupt_path_counts_rejected() {
    let idx = fit_ood_index(&bundle(8), &[3, 3, 3], 0.05, 0.01, &GmmConfig::new(1)).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    save_ood_index(&idx, tmp.path()).unwrap();
    let f = tmp.path().join("path_freq.csv");
    let text = fs::read_to_string(&f).unwrap();
    fs::write(&f, text.replacen("path,count\n", "path,count\n9->9->9,1\n", 1)).unwrap();
    assert!(load_ood_index(tmp.path()).is_err());
}
