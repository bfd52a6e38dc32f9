use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use clusterpath::clustering::GmmConfig;
use clusterpath::faithfulness::{daf_for_paths, DafConfig, DafReport, EncodingMode};
use clusterpath::ood::{
    default_epsilon_grid, evaluate, fit_ood_index, load_ood_index, roc_points, save_ood_index, tune_epsilon,
    EpsilonTuning, OodEvaluation,
};
use clusterpath::paths::{
    coverage_curve, divergence_groups, fit_path_model, hamming_agreement, load_path_model, mean_path_agreement,
    path_complexity, path_table_csv, path_table_doc, sankey_flows, save_path_model, weighted_purity,
    ClusteringSettings, DivergenceGroup, LabelSource, PathModel, PathTable, PathTableDoc, SankeyFlows,
};
use clusterpath::synth::{generate, generate_perturbed, CueMode, PredictionRule, SynthSpec};
use clusterpath::{load_bundle, save_bundle, ActivationBundle};
use log::info;
use serde::Serialize;

use crate::args::*;
use crate::report::{emit, render, write_text};
use crate::UsageError;

pub const FIT_REPORT_FILE: &str = "fit_report.json";
pub const PLANT_FILE: &str = "plant.json";

/// A single value is repeated for every layer.
fn broadcast<T: Copy>(what: &str, values: &[T], n_layers: usize) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0]; n_layers]),
        n if n == n_layers => Ok(values.to_vec()),
        n => bail!(UsageError(format!("--{what} has {n} values for {n_layers} layers"))),
    }
}

fn label_source(choice: LabelChoice) -> Option<LabelSource> {
    match choice {
        LabelChoice::Labels => Some(LabelSource::Labels),
        LabelChoice::Predictions => Some(LabelSource::Predictions),
        LabelChoice::None => None,
    }
}

fn load_model(dir: &Path) -> Result<PathModel<f32>> {
    Ok(load_path_model::<f32>(dir)?)
}

fn table_for(model: &PathModel<f32>, bundle: &ActivationBundle, choice: LabelChoice) -> Result<PathTable> {
    let paths = model.generate_paths(bundle)?;
    let classes = match label_source(choice) {
        Some(src) => Some((src.select(bundle)?, src)),
        None => None,
    };
    Ok(PathTable::from_paths(&paths, classes)?)
}

#[derive(Serialize)]
struct LayerFit {
    name: String,
    k: usize,
    inertia: f64,
    iterations_run: usize,
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let k = broadcast("k", &a.k, bundle.n_layers())?;
    let settings = ClusteringSettings {
        restarts: a.cluster.restarts,
        max_iter: a.cluster.max_iter,
        tol: a.cluster.tol,
        seed: a.cluster.seed,
    };
    let model = fit_path_model(&bundle, &k, &settings)?;
    save_path_model(&model, &a.out)?;
    let layers: Vec<LayerFit> = model
        .layer_names
        .iter()
        .zip(&model.layer_models)
        .map(|(name, m)| {
            info!("layer {name}: k={} inertia={:.6} iterations={}", m.k, m.inertia, m.iterations_run);
            LayerFit {
                name: name.clone(),
                k: m.k,
                inertia: m.inertia,
                iterations_run: m.iterations_run,
            }
        })
        .collect();
    emit(Some(&a.out.join(FIT_REPORT_FILE)), "fit", a, &layers)
}

pub fn assign(a: &AssignArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let bundle = load_bundle(&a.bundle)?;
    let paths = model.generate_paths(&bundle)?;
    let text = match a.format {
        PathFormat::Csv => {
            let mut s = String::from("sample,path\n");
            for (i, p) in paths.iter().enumerate() {
                let _ = writeln!(s, "{i},{p}");
            }
            s
        }
        PathFormat::Json => serde_json::to_string_pretty(&paths)? + "\n",
    };
    write_text(&a.out, &text)
}

#[derive(Serialize)]
struct MetricsResult {
    n_samples: usize,
    k_per_layer: Vec<usize>,
    /// Decimal string: the product can exceed what JSON numbers hold exactly.
    path_complexity: String,
    n_unique: usize,
    unique_fraction_of_complexity: f64,
    weighted_purity: Option<f64>,
    coverage_curve: Vec<f64>,
    table: PathTableDoc,
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let bundle = load_bundle(&a.bundle)?;
    let table = table_for(&model, &bundle, a.label_source)?;
    let omega = path_complexity(&model.k_per_layer())?;
    let purity = match a.label_source {
        LabelChoice::None => None,
        _ => Some(weighted_purity(&table)?),
    };
    if let Some(p) = &a.table_csv {
        write_text(p, &path_table_csv(&table))?;
    }
    info!("{} unique paths of {omega} possible", table.n_unique());
    let result = MetricsResult {
        n_samples: table.total(),
        k_per_layer: model.k_per_layer(),
        path_complexity: omega.to_string(),
        n_unique: table.n_unique(),
        unique_fraction_of_complexity: table.n_unique() as f64 / omega as f64,
        weighted_purity: purity,
        coverage_curve: coverage_curve(&table),
        table: path_table_doc(&table),
    };
    emit(a.out.as_deref(), "metrics", a, &result)
}

#[derive(Serialize)]
struct DafResult {
    full_path: DafReport,
    final_layer_only: DafReport,
    gain: f64,
}

pub fn daf(a: &DafArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let bundle = load_bundle(&a.bundle)?;
    let paths = model.generate_paths(&bundle)?;
    let cfg = DafConfig {
        n_trees: a.n_trees,
        train_fraction: a.split,
        seed: a.seed,
    };
    let k = model.k_per_layer();
    let full = daf_for_paths(&paths, &k, bundle.predictions(), EncodingMode::FullPath, &cfg)?;
    let last = daf_for_paths(&paths, &k, bundle.predictions(), EncodingMode::FinalLayerOnly, &cfg)?;
    info!("DAF full path {:.4}, final layer only {:.4}", full.daf, last.daf);
    let result = DafResult {
        gain: full.daf - last.daf,
        full_path: full,
        final_layer_only: last,
    };
    emit(a.out.as_deref(), "daf", a, &result)
}

#[derive(Serialize)]
struct AgreementResult {
    n_samples: usize,
    path_agreement: f64,
    per_layer_agreement: Vec<f64>,
    identical_paths: usize,
}

pub fn agreement(a: &AgreementArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let r = model.generate_paths(&load_bundle(&a.reference)?)?;
    let q = model.generate_paths(&load_bundle(&a.pert)?)?;
    let pa = mean_path_agreement(&r, &q)?;
    let per_layer = (0..model.n_layers())
        .map(|l| r.iter().zip(&q).filter(|(x, y)| x.ids()[l] == y.ids()[l]).count() as f64 / r.len() as f64)
        .collect();
    let identical = r
        .iter()
        .zip(&q)
        .map(|(x, y)| hamming_agreement(x, y))
        .collect::<clusterpath::Result<Vec<_>>>()?
        .into_iter()
        .filter(|&v| v == 1.0)
        .count();
    info!("path agreement {pa:.6}");
    let result = AgreementResult {
        n_samples: r.len(),
        path_agreement: pa,
        per_layer_agreement: per_layer,
        identical_paths: identical,
    };
    emit(a.out.as_deref(), "agreement", a, &result)
}

#[derive(Serialize)]
struct OodFitResult {
    n_train: usize,
    k_per_layer: Vec<usize>,
    rho: f64,
    epsilon: f64,
    n_unique_training_paths: usize,
    final_log_likelihood: Vec<Option<f64>>,
    tuning: Option<EpsilonTuning>,
}

pub fn ood_fit(a: &OodFitArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let k = broadcast("k", &a.k, bundle.n_layers())?;
    let gmm = GmmConfig {
        k: 1,
        max_iter: a.max_iter,
        tol: a.tol,
        reg: a.reg,
        seed: a.seed,
        init_restarts: a.init_restarts,
    };
    if a.epsilon.is_none() && a.tune_bundle.is_none() {
        bail!(UsageError("one of --epsilon or --tune-bundle is required".into()));
    }
    let mut index = fit_ood_index(&bundle, &k, a.rho, a.epsilon.unwrap_or(0.0), &gmm)?;
    let tuning = match &a.tune_bundle {
        Some(dir) => {
            let held = load_bundle(dir)?;
            let rarities: Vec<f64> = index.score_bundle(&held)?.iter().map(|s| s.rarity).collect();
            let grid = a.eps_grid.clone().unwrap_or_else(default_epsilon_grid);
            let t = tune_epsilon(&rarities, &grid, a.max_flag_rate)?;
            info!("tuned epsilon {} (held-out flag rate {:.4})", t.epsilon, t.flag_rate);
            index = index.with_epsilon(t.epsilon)?;
            Some(t)
        }
        None => None,
    };
    save_ood_index(&index, &a.out)?;
    let result = OodFitResult {
        n_train: index.n_train,
        k_per_layer: index.k_per_layer(),
        rho: index.rho,
        epsilon: index.epsilon,
        n_unique_training_paths: index.path_freq.len(),
        final_log_likelihood: index
            .layer_gmms
            .iter()
            .map(|g| g.log_likelihood_trace.last().copied())
            .collect(),
        tuning,
    };
    emit(Some(&a.out.join(FIT_REPORT_FILE)), "ood-fit", a, &result)
}

pub fn ood_score(a: &OodScoreArgs) -> Result<()> {
    let mut index = load_ood_index(&a.index)?;
    if let Some(e) = a.epsilon {
        index = index.with_epsilon(e)?;
    }
    let scores = index.score_bundle(&load_bundle(&a.bundle)?)?;
    let mut s = String::from("sample,path,rarity,flagged\n");
    for (i, sc) in scores.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{},{}", sc.path, sc.rarity, sc.flagged);
    }
    info!(
        "{} of {} samples flagged",
        scores.iter().filter(|s| s.flagged).count(),
        scores.len()
    );
    write_text(&a.out, &s)
}

#[derive(Serialize)]
struct OodEvalResult {
    #[serde(flatten)]
    evaluation: OodEvaluation,
    epsilon: f64,
    roc: Option<Vec<(f64, f64)>>,
}

pub fn ood_eval(a: &OodEvalArgs) -> Result<()> {
    let index = load_ood_index(&a.index)?;
    let inl = load_bundle(&a.inliers)?;
    let out = load_bundle(&a.outliers)?;
    let evaluation = evaluate(&index, &inl, &out)?;
    let roc = if a.roc {
        let s = |b| -> Result<Vec<f64>> { Ok(index.score_bundle(b)?.iter().map(|s| s.rarity).collect()) };
        Some(roc_points(&s(&inl)?, &s(&out)?)?)
    } else {
        None
    };
    info!(
        "AUROC {:.4} AUPR {:.4} FPR@95TPR {:.4}",
        evaluation.auroc, evaluation.aupr, evaluation.fpr_at_95tpr
    );
    let result = OodEvalResult {
        evaluation,
        epsilon: index.epsilon,
        roc,
    };
    emit(a.out.as_deref(), "ood-eval", a, &result)
}

fn parse_cue(s: &str) -> Result<CueMode> {
    Ok(match s {
        "off" => CueMode::Off,
        "randomized" => CueMode::Randomized,
        _ => match s.strip_prefix("correlated:").map(str::parse::<f64>) {
            Some(Ok(p)) => CueMode::Correlated(p),
            _ => bail!(UsageError(format!(
                "--cue must be off, randomized or correlated:<p>, got `{s}`"
            ))),
        },
    })
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let n_layers = a.dims.len();
    let spec = SynthSpec {
        n_samples: a.n,
        n_classes: a.classes,
        layer_dims: a.dims.clone(),
        blobs_per_layer: match &a.blobs {
            Some(b) => broadcast("blobs", b, n_layers)?,
            None => vec![a.classes; n_layers],
        },
        sigma_within: a.sigma_within,
        sigma_between: a.sigma_between,
        cue: parse_cue(&a.cue)?,
        intermediate_signal: a.intermediate_signal,
        prediction_rule: match a.prediction_rule {
            RuleChoice::FinalBlob => PredictionRule::FinalBlob,
            RuleChoice::PathFunction => PredictionRule::PathFunction,
        },
        shift: a.shift.as_deref().map(|s| broadcast("shift", s, n_layers)).transpose()?,
        seed: a.seed,
        center_seed: a.center_seed.unwrap_or(a.seed),
    };
    let out = generate(&spec)?;
    save_bundle(&out.bundle, &a.out)?;
    info!(
        "wrote {} samples over {} layers to {}",
        out.bundle.n_samples(),
        n_layers,
        a.out.display()
    );
    write_text(&a.out.join(PLANT_FILE), &render("synth", a, &out.plant)?)
}

pub fn perturb(a: &PerturbArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let noisy = generate_perturbed(&bundle, a.sigma, a.seed)?;
    save_bundle(&noisy, &a.out)?;
    Ok(())
}

#[derive(Serialize)]
struct ReportResult {
    table: PathTableDoc,
    sankey: Option<SankeyFlows>,
    divergence: Option<Vec<DivergenceGroup>>,
    class_totals: BTreeMap<i64, usize>,
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let bundle = load_bundle(&a.bundle)?;
    let table = table_for(&model, &bundle, a.label_source)?;
    if let Some(p) = &a.table_csv {
        write_text(p, &path_table_csv(&table))?;
    }
    let mut class_totals = BTreeMap::new();
    for e in table.entries().values() {
        for (c, n) in &e.class_counts {
            *class_totals.entry(*c).or_insert(0) += n;
        }
    }
    let result = ReportResult {
        table: path_table_doc(&table),
        sankey: a.sankey.then(|| sankey_flows(&table)),
        divergence: a.divergence_layer.map(|l| divergence_groups(&table, l)).transpose()?,
        class_totals,
    };
    emit(a.out.as_deref(), "report", a, &result)
}
