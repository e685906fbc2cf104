mod common;

use proptest::prelude::*;
use rand::Rng;

use nalgebra::Vector3;
use softjaccard::alignment::{align_to_atlas, apply_transform, RansacConfig, SimilarityTransform};
use softjaccard::analysis::{derive_pair_labels, label_pairs, roc_auc, roc_from_scores};
use softjaccard::group::{build_group_superset, classify_binary_group, classify_cohort, group_roc, GroupConfig, SignConvention};
use softjaccard::index::IndexMode;
use softjaccard::jaccard::{pairwise_distance_matrix, CohortEngine, DistanceForm, PairwiseConfig};
use softjaccard::kernels::{composite_kernel, location_kernel};
use softjaccard::model::{KernelConfig, KernelMode, PairLabel, Sex, SubjectRecord, Zygosity};
use softjaccard::synth::{generate_cohort, CohortSpec};

fn transform(rng: &mut impl Rng) -> SimilarityTransform {
    let axis = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    SimilarityTransform::new(
        rng.random_range(0.7..1.4),
        SimilarityTransform::rotation_about(axis, rng.random_range(-3.0..3.0)),
        Vector3::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)),
    )
    .unwrap()
}

fn records_strategy() -> impl Strategy<Value = Vec<SubjectRecord>> {
    prop::collection::vec((0..4usize, 0..3usize, 0..3usize, 0..3usize, any::<bool>()), 1..25).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (fam, mother, father, zyg, female))| {
                let parent = |p: usize, tag: &str| if p == 0 { String::new() } else { format!("F{fam}_{tag}{p}") };
                SubjectRecord {
                    subject_id: format!("S{i:03}"),
                    family_id: format!("F{fam}"),
                    mother_id: parent(mother, "M"),
                    father_id: parent(father, "P"),
                    zygosity: [Zygosity::NotTwin, Zygosity::Mz, Zygosity::Dz][zyg],
                    sex: if female { Sex::F } else { Sex::M },
                    race: "white".into(),
                    age: 25.0,
                }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn larger_k_never_decreases_directed_measure(seed in 0u64..10_000, k in 1usize..20, extra in 1usize..40) {
        let cohort = common::random_cohort(&mut common::rng(seed), 6, 25, 6);
        let engine = CohortEngine::new(&cohort, IndexMode::Exact).unwrap();
        for mode in [KernelMode::Hse, KernelMode::SseApp, KernelMode::SseAppGeo] {
            let small = &engine.directed(&KernelConfig::with_mode(mode, k), &[mode], 1).unwrap()[0];
            let large = &engine.directed(&KernelConfig::with_mode(mode, k + extra), &[mode], 1).unwrap()[0];
            for a in 0..cohort.len() {
                for b in 0..cohort.len() {
                    prop_assert!(large.get(a, b) >= small.get(a, b) - 1e-12, "{mode} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn pair_labels_partition_all_pairs(records in records_strategy()) {
        let labels = derive_pair_labels(&records);
        let n = records.len();
        prop_assert_eq!(labels.counts().iter().sum::<usize>(), n * (n - 1) / 2);
        prop_assert_eq!(labels.iter().count(), n * (n - 1) / 2);
    }

    #[test]
    fn group_decision_depends_only_on_difference(df in 0.0f64..10.0, dm in 0.0f64..10.0, c in -5.0f64..5.0, tau in -2.0f64..2.0) {
        for sign in [SignConvention::CloserGroup, SignConvention::AsPrinted] {
            // shifting by an exactly representable constant keeps the difference exact
            let c = (c * 4.0).round() / 4.0;
            let (df, dm) = ((df * 64.0).round() / 64.0, (dm * 64.0).round() / 64.0);
            prop_assert_eq!(
                classify_binary_group(df, dm, tau, sign),
                classify_binary_group(df + c + 10.0, dm + c + 10.0, tau, sign)
            );
        }
    }

    #[test]
    fn same_transform_preserves_location_kernel(seed in 0u64..10_000) {
        let mut rng = common::rng(seed);
        let t = transform(&mut rng);
        let cohort = common::random_cohort(&mut rng, 2, 10, 4);
        let moved: Vec<_> = cohort.iter().map(|s| apply_transform(s, &t)).collect();
        for (a, ma) in cohort[0].keypoints.iter().zip(&moved[0].keypoints) {
            for (b, mb) in cohort[1].keypoints.iter().zip(&moved[1].keypoints) {
                let before = location_kernel(&a.location, &b.location, a.scale, b.scale).unwrap().get();
                let after = location_kernel(&ma.location, &mb.location, ma.scale, mb.scale).unwrap().get();
                prop_assert!((before - after).abs() <= 1e-9, "{before} vs {after}");
                let app = composite_kernel(a, b, 0.5, KernelMode::SseApp).unwrap();
                prop_assert_eq!(app, composite_kernel(ma, mb, 0.5, KernelMode::SseApp).unwrap());
            }
        }
    }
}

fn small_spec(seed: u64) -> CohortSpec {
    CohortSpec {
        seed,
        n_families: 10,
        keypoints: 80,
        ..CohortSpec::default()
    }
}

#[test]
fn synthetic_subjects_have_exact_keypoint_counts() {
    for m in [20, 77, 150] {
        let c = generate_cohort(&CohortSpec { keypoints: m, ..small_spec(3) }).unwrap();
        assert!(c.sets.iter().all(|s| s.len() == m));
    }
}

#[test]
fn descriptor_noise_increases_mz_distance() {
    // the adaptive bandwidth absorbs noise well below the nearest-neighbor spacing,
    // so the levels span the range where twin correspondences start to break
    for mode in [KernelMode::SseApp, KernelMode::SseAppGeo] {
        let mut means = Vec::new();
        for noise in [0.0, 1.0, 2.0] {
            let spec = CohortSpec {
                descriptor_noise: noise,
                mz_probability: 0.6,
                ..small_spec(4)
            };
            let c = generate_cohort(&spec).unwrap();
            let m = pairwise_distance_matrix(&c.sets, &PairwiseConfig {
                kernel: KernelConfig::with_mode(mode, 40),
                index: IndexMode::Exact,
                ..PairwiseConfig::default()
            })
            .unwrap();
            let d = label_pairs(&m, &c.records).unwrap().distances(PairLabel::Mz);
            assert!(!d.is_empty());
            means.push(d.iter().sum::<f64>() / d.len() as f64);
        }
        assert!(means[0] < means[1] && means[1] < means[2], "{mode}: {means:?}");
    }
}

#[test]
fn group_supersets_exclude_self_and_relatives() {
    let c = generate_cohort(&small_spec(6)).unwrap();
    let labels = derive_pair_labels(&c.records);
    for q in 0..c.sets.len() {
        for sex in [Sex::F, Sex::M] {
            let superset = match build_group_superset(&c.sets, &c.records, sex.as_str(), |r| r.sex == sex, q) {
                Ok(s) => s,
                Err(_) => continue,
            };
            for &m in &superset.members {
                assert_ne!(m, q);
                assert_eq!(labels.get(q, m), PairLabel::Ur, "member {m} related to {q}");
                assert_eq!(c.records[m].sex, sex);
            }
            assert!(superset.provenance(&c.sets).all(|(image, _)| image != q));
        }
    }
}

#[test]
fn group_roc_equals_roc_on_scores() {
    let c = generate_cohort(&CohortSpec { group_fraction: 0.2, ..small_spec(8) }).unwrap();
    let engine = CohortEngine::new(&c.sets, IndexMode::Exact).unwrap();
    let results = classify_cohort(&engine, &c.records, &GroupConfig {
        kernel: KernelConfig::with_mode(KernelMode::SseAppGeo, 40),
        ..GroupConfig::default()
    })
    .unwrap();
    let curve = group_roc(&results).unwrap();
    let f: Vec<f64> = results.iter().filter(|r| r.actual == Sex::F).map(|r| r.score).collect();
    let m: Vec<f64> = results.iter().filter(|r| r.actual == Sex::M).map(|r| r.score).collect();
    assert_eq!(curve, roc_from_scores(&f, &m).unwrap());
    let negated: (Vec<f64>, Vec<f64>) = (f.iter().map(|s| -s).collect(), m.iter().map(|s| -s).collect());
    assert!((curve.auc - roc_auc(&negated.0, &negated.1).unwrap().auc).abs() <= 1e-12);
    assert!((curve.auc - common::mann_whitney(&negated.0, &negated.1)).abs() <= 1e-9);
}

#[test]
fn sibling_auc_is_stable_across_atlas_choices() {
    let c = generate_cohort(&CohortSpec { n_families: 15, keypoints: 150, ..small_spec(12) }).unwrap();
    let mut rng = common::rng(12);
    // place every subject in its own random frame, then undo it through an atlas
    let scattered: Vec<_> = c.sets.iter().map(|s| apply_transform(s, &transform(&mut rng))).collect();
    let config = PairwiseConfig {
        kernel: KernelConfig::with_mode(KernelMode::SseAppGeo, 60),
        distance: DistanceForm::NegLog,
        index: IndexMode::Exact,
        threads: 1,
    };
    let mut aucs = Vec::new();
    for atlas in [0, 3, 7, 11, 19] {
        let aligned: Vec<_> = scattered
            .iter()
            .map(|s| {
                let est = align_to_atlas(s, &scattered[atlas], 0.9, &RansacConfig::default()).unwrap();
                apply_transform(s, &est.transform)
            })
            .collect();
        let m = pairwise_distance_matrix(&aligned, &config).unwrap();
        let table = label_pairs(&m, &c.records).unwrap();
        let related: Vec<f64> = table.pairs.iter().filter(|p| p.label.is_sibling()).map(|p| p.distance).collect();
        aucs.push(roc_auc(&related, &table.distances(PairLabel::Ur)).unwrap().auc);
    }
    let spread = aucs.iter().cloned().fold(f64::MIN, f64::max) - aucs.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 0.01, "{aucs:?}");
}
