//! Browser bindings for the soft Jaccard pipeline.
//!
//! Every export takes plain numbers and returns a JSON string. The `*_json`
//! functions hold the logic so they can be exercised natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use softjaccard::analysis::{conditional_distributions, label_pairs, predict_families, roc_auc, Grouping, RocCurve, Summary};
use softjaccard::group::{classify_cohort, group_roc, GroupConfig, GroupResult, SignConvention};
use softjaccard::index::IndexMode;
use softjaccard::jaccard::{CohortEngine, DistanceForm};
use softjaccard::kernels::{location_kernel, scale_kernel};
use softjaccard::model::{KernelConfig, KernelMode, PairLabel};
use softjaccard::synth::{generate_cohort, CohortSpec, SyntheticCohort};

const MAX_FAMILIES: usize = 40;
const MAX_KEYPOINTS: usize = 400;

#[derive(Serialize)]
struct Curves {
    /// `(d^2 / alpha^2, value)`
    appearance: Vec<[f64; 2]>,
    /// `(displacement in mm, value)` for two keypoints of the given scale
    location: Vec<[f64; 2]>,
    /// `(scale ratio, value)`
    scale: Vec<[f64; 2]>,
}

pub fn kernel_curves_json(scale: f64, steps: usize) -> Result<String, String> {
    let steps = steps.clamp(2, 2000);
    let t = |i: usize| i as f64 / (steps - 1) as f64;
    let appearance = (0..steps).map(|i| [4.0 * t(i), (-4.0 * t(i)).exp()]).collect();
    let mut location = Vec::with_capacity(steps);
    let mut ratio = Vec::with_capacity(steps);
    for i in 0..steps {
        let offset = 3.0 * scale * t(i);
        let v = location_kernel(&[0.0; 3], &[offset, 0.0, 0.0], scale, scale).map_err(|e| e.to_string())?;
        location.push([offset, v.get()]);
        let r = (16f64.ln() * (2.0 * t(i) - 1.0)).exp();
        let v = scale_kernel(scale, scale * r).map_err(|e| e.to_string())?;
        ratio.push([r, v.get()]);
    }
    Ok(serde_json::to_string(&Curves {
        appearance,
        location,
        scale: ratio,
    })
    .unwrap())
}

fn kernel_mode(token: &str) -> Result<KernelMode, String> {
    token.parse()
}

fn cohort(families: usize, keypoints: usize, seed: u32, group_fraction: Option<f64>) -> Result<SyntheticCohort, String> {
    if families == 0 || families > MAX_FAMILIES {
        return Err(format!("families must be in 1..={MAX_FAMILIES}"));
    }
    if !(20..=MAX_KEYPOINTS).contains(&keypoints) {
        return Err(format!("keypoints must be in 20..={MAX_KEYPOINTS}"));
    }
    let mut spec = CohortSpec {
        seed: seed.into(),
        n_families: families,
        keypoints,
        descriptor_dim: 32,
        ..CohortSpec::default()
    };
    if let Some(g) = group_fraction {
        spec.group_fraction = g;
    }
    generate_cohort(&spec).map_err(|e| e.to_string())
}

fn config(kernel: &str, k: usize) -> Result<KernelConfig, String> {
    let cfg = KernelConfig::with_mode(kernel_mode(kernel)?, k);
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

#[derive(Serialize)]
struct LabelSummary {
    label: String,
    summary: Summary,
}

#[derive(Serialize)]
struct LabelRoc {
    label: &'static str,
    auc: f64,
    fpr: Vec<f64>,
    tpr: Vec<f64>,
}

#[derive(Serialize)]
struct CohortReport {
    subjects: Vec<String>,
    families: Vec<String>,
    /// Row-major distance matrix; infinite entries are `null`.
    distances: Vec<f64>,
    summaries: Vec<LabelSummary>,
    roc: Vec<LabelRoc>,
    family_correct: usize,
}

fn curve(label: PairLabel, c: RocCurve) -> LabelRoc {
    LabelRoc {
        label: label.as_str(),
        auc: c.auc,
        fpr: c.fpr,
        tpr: c.tpr,
    }
}

pub fn cohort_report_json(families: usize, keypoints: usize, seed: u32, k: usize, kernel: &str) -> Result<String, String> {
    let synth = cohort(families, keypoints, seed, None)?;
    let cfg = config(kernel, k)?;
    let engine = CohortEngine::new(&synth.sets, IndexMode::Exact).map_err(|e| e.to_string())?;
    let matrix = engine
        .distance_matrix(&cfg, DistanceForm::NegLog, 1)
        .map_err(|e| e.to_string())?;
    let table = label_pairs(&matrix, &synth.records).map_err(|e| e.to_string())?;
    let summaries = conditional_distributions(&table.pairs, Grouping::Label)
        .into_iter()
        .map(|g| LabelSummary {
            label: g.key,
            summary: g.summary,
        })
        .collect();
    let unrelated = table.distances(PairLabel::Ur);
    let mut roc = Vec::new();
    for label in PairLabel::ALL.into_iter().filter(|l| l.is_sibling()) {
        let related = table.distances(label);
        if !related.is_empty() && !unrelated.is_empty() {
            roc.push(curve(label, roc_auc(&related, &unrelated).map_err(|e| e.to_string())?));
        }
    }
    let predictions = predict_families(&matrix, &synth.records).map_err(|e| e.to_string())?;
    let family_correct = predictions
        .iter()
        .zip(&synth.records)
        .filter(|(p, r)| p.predicted_family == r.family_id)
        .count();
    let n = matrix.len();
    let distances = (0..n).flat_map(|i| matrix.row(i).to_vec()).collect();
    Ok(serde_json::to_string(&CohortReport {
        subjects: matrix.subject_ids().to_vec(),
        families: synth.records.iter().map(|r| r.family_id.clone()).collect(),
        distances,
        summaries,
        roc,
        family_correct,
    })
    .unwrap())
}

#[derive(Serialize)]
struct GroupReport {
    results: Vec<GroupResult>,
    auc: f64,
    fpr: Vec<f64>,
    tpr: Vec<f64>,
    correct: usize,
}

pub fn sex_classification_json(
    families: usize,
    keypoints: usize,
    seed: u32,
    k: usize,
    kernel: &str,
    group_fraction: f64,
    tau: f64,
) -> Result<String, String> {
    let synth = cohort(families, keypoints, seed, Some(group_fraction))?;
    let engine = CohortEngine::new(&synth.sets, IndexMode::Exact).map_err(|e| e.to_string())?;
    let cfg = GroupConfig {
        kernel: config(kernel, k)?,
        distance: DistanceForm::NegLog,
        tau,
        sign: SignConvention::CloserGroup,
        threads: 1,
    };
    let results = classify_cohort(&engine, &synth.records, &cfg).map_err(|e| e.to_string())?;
    let curve = group_roc(&results).map_err(|e| e.to_string())?;
    let correct = results.iter().filter(|r| r.predicted == r.actual).count();
    Ok(serde_json::to_string(&GroupReport {
        results,
        auc: curve.auc,
        fpr: curve.fpr,
        tpr: curve.tpr,
        correct,
    })
    .unwrap())
}

/// Kernel values against descriptor distance, displacement and scale ratio.
#[wasm_bindgen(js_name = kernelCurves)]
pub fn kernel_curves(scale: f64, steps: usize) -> Result<String, JsError> {
    kernel_curves_json(scale, steps).map_err(|e| JsError::new(&e))
}

/// Synthetic cohort distances, per-relationship summaries and ROC curves.
#[wasm_bindgen(js_name = cohortReport)]
pub fn cohort_report(families: usize, keypoints: usize, seed: u32, k: usize, kernel: &str) -> Result<String, JsError> {
    cohort_report_json(families, keypoints, seed, k, kernel).map_err(|e| JsError::new(&e))
}

/// Sex prediction from distances to the female and male supersets.
#[wasm_bindgen(js_name = sexClassification)]
pub fn sex_classification(
    families: usize,
    keypoints: usize,
    seed: u32,
    k: usize,
    kernel: &str,
    group_fraction: f64,
    tau: f64,
) -> Result<String, JsError> {
    sex_classification_json(families, keypoints, seed, k, kernel, group_fraction, tau).map_err(|e| JsError::new(&e))
}
