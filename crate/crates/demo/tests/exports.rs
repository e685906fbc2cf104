use serde_json::Value;
use softjaccard_demo::{cohort_report_json, kernel_curves_json, sex_classification_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn kernel_curves_start_at_one_and_decay() {
    let v = parse(kernel_curves_json(4.0, 50).unwrap());
    for key in ["appearance", "location"] {
        let pts = v[key].as_array().unwrap();
        assert_eq!(pts.len(), 50);
        assert_eq!(pts[0][1].as_f64().unwrap(), 1.0);
        let ys: Vec<f64> = pts.iter().map(|p| p[1].as_f64().unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[1] <= w[0]), "{key}");
    }
    let scale = v["scale"].as_array().unwrap();
    let peak = scale.iter().map(|p| p[1].as_f64().unwrap()).fold(0.0, f64::max);
    assert!((peak - 1.0).abs() < 0.05);
    assert!(kernel_curves_json(0.0, 10).is_err());
}

#[test]
fn cohort_report_separates_twins() {
    let v = parse(cohort_report_json(6, 60, 1, 30, "app+geo").unwrap());
    let n = v["subjects"].as_array().unwrap().len();
    assert_eq!(v["distances"].as_array().unwrap().len(), n * n);
    let roc = v["roc"].as_array().unwrap();
    assert!(!roc.is_empty());
    for r in roc {
        let auc = r["auc"].as_f64().unwrap();
        assert!((0.5..=1.0).contains(&auc), "{}", r["label"]);
    }
    assert!(v["family_correct"].as_u64().unwrap() as usize <= n);
    assert_eq!(
        cohort_report_json(6, 60, 1, 30, "app+geo").unwrap(),
        cohort_report_json(6, 60, 1, 30, "app+geo").unwrap()
    );
}

#[test]
fn sex_classification_reports_scores() {
    let v = parse(sex_classification_json(8, 60, 2, 30, "app", 0.3, 0.0).unwrap());
    let results = v["results"].as_array().unwrap();
    assert!(!results.is_empty());
    assert!(v["correct"].as_u64().unwrap() as usize <= results.len());
    let auc = v["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
}

#[test]
fn bad_parameters_are_rejected() {
    assert!(cohort_report_json(0, 60, 1, 30, "app").is_err());
    assert!(cohort_report_json(6, 60, 1, 30, "gaussian").is_err());
    assert!(cohort_report_json(6, 5000, 1, 30, "app").is_err());
    assert!(sex_classification_json(6, 60, 1, 0, "app", 0.1, 0.0).is_err());
}
