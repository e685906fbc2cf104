//! Subject-to-group distances over group supersets and the one-threshold
//! binary (sex) classifier.
//!
//! A superset is the union of the keypoints of every selected subject that is
//! unrelated to the query. Its directed measures reuse the cohort-wide kNN
//! lists and bandwidths:
//! `mu(A -> G)` takes, per keypoint of `A`, the best candidate over all members,
//! and `mu(G -> A)` sums the members' directed measures toward `A`.

use std::collections::HashMap;

use serde::Serialize;

use crate::analysis::{pair_label, roc_from_scores, RocCurve};
use crate::error::{Error, Result};
use crate::jaccard::{jaccard_distance, mu_intersection, soft_jaccard_index, CohortEngine, DistanceForm, KeypointMaxima};
use crate::model::{KernelConfig, KeypointSet, PairLabel, Sex, SubjectRecord};

/// Members of one group superset for one query image.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSuperset {
    pub group: String,
    /// Cohort image indices, ascending.
    pub members: Vec<usize>,
    /// Subjects that matched the predicate but were left out as the query or its relatives.
    pub excluded: Vec<String>,
    size: usize,
}

impl GroupSuperset {
    /// Total keypoint count.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// `(image, keypoint)` of every superset keypoint.
    pub fn provenance<'a>(&'a self, cohort: &'a [KeypointSet]) -> impl Iterator<Item = (usize, usize)> + 'a {
        self.members
            .iter()
            .flat_map(move |&m| (0..cohort[m].len()).map(move |k| (m, k)))
    }
}

fn record_index<'a>(cohort: &[KeypointSet], records: &'a [SubjectRecord]) -> Result<Vec<&'a SubjectRecord>> {
    let by_id: HashMap<&str, &SubjectRecord> = records.iter().map(|r| (r.subject_id.as_str(), r)).collect();
    cohort
        .iter()
        .map(|s| {
            by_id
                .get(s.subject_id.as_str())
                .copied()
                .ok_or_else(|| Error::UnknownSubject(s.subject_id.clone()))
        })
        .collect()
}

fn superset_from(
    cohort: &[KeypointSet],
    recs: &[&SubjectRecord],
    group: &str,
    predicate: &dyn Fn(&SubjectRecord) -> bool,
    query: usize,
) -> Result<GroupSuperset> {
    let q = recs[query];
    let mut members = Vec::new();
    let mut excluded = Vec::new();
    for (i, r) in recs.iter().enumerate() {
        if !predicate(r) {
            continue;
        }
        let related = r.subject_id == q.subject_id || pair_label(q, r).0 != PairLabel::Ur;
        if related {
            if !excluded.contains(&r.subject_id) {
                excluded.push(r.subject_id.clone());
            }
        } else {
            members.push(i);
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let size = members.iter().map(|&m| cohort[m].len()).sum();
    Ok(GroupSuperset {
        group: group.to_string(),
        members,
        excluded,
        size,
    })
}

/// Superset of subjects accepted by `predicate`, without the query image's
/// subject and its relatives (any pair label other than UR).
pub fn build_group_superset(
    cohort: &[KeypointSet],
    records: &[SubjectRecord],
    group: &str,
    predicate: impl Fn(&SubjectRecord) -> bool,
    query: usize,
) -> Result<GroupSuperset> {
    let recs = record_index(cohort, records)?;
    superset_from(cohort, &recs, group, &predicate, query)
}

/// Soft Jaccard distance from the query image to a superset, given the query's
/// keypoint maxima and every image's directed row.
pub fn superset_distance(
    query: usize,
    query_len: usize,
    maxima: &KeypointMaxima,
    directed_rows: &[Vec<f64>],
    superset: &GroupSuperset,
    form: DistanceForm,
) -> Result<f64> {
    let mut is_member = vec![false; directed_rows.len()];
    for &m in &superset.members {
        is_member[m] = true;
    }
    let to_group = maxima.mu_to_union(|img| is_member[img]);
    let from_group: f64 = superset.members.iter().map(|&m| directed_rows[m][query]).sum();
    let j = soft_jaccard_index(mu_intersection(to_group, from_group), query_len, superset.len())?;
    Ok(jaccard_distance(j, form))
}

/// Sign convention of the threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SignConvention {
    /// Female iff `d_to_M - d_to_F + tau > 0`: the closer group wins at `tau = 0`.
    #[default]
    CloserGroup,
    /// Female iff `d_to_F - d_to_M + tau > 0`.
    AsPrinted,
}

/// `d_to_M - d_to_F`, with `inf - inf` taken as 0.
pub fn group_score(d_to_f: f64, d_to_m: f64) -> f64 {
    let s = d_to_m - d_to_f;
    if s.is_nan() {
        0.0
    } else {
        s
    }
}

/// Ties at the boundary resolve to Male.
pub fn classify_binary_group(d_to_f: f64, d_to_m: f64, tau: f64, sign: SignConvention) -> Sex {
    let score = match sign {
        SignConvention::CloserGroup => group_score(d_to_f, d_to_m),
        SignConvention::AsPrinted => -group_score(d_to_f, d_to_m),
    };
    if score + tau > 0.0 {
        Sex::F
    } else {
        Sex::M
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupResult {
    pub subject_id: String,
    pub d_to_f: f64,
    pub d_to_m: f64,
    pub score: f64,
    pub predicted: Sex,
    pub actual: Sex,
}

pub fn write_group_csv(results: &[GroupResult], out: impl std::io::Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject_id", "d_to_F", "d_to_M", "score", "predicted", "actual"])?;
    for r in results {
        w.write_record([
            r.subject_id.as_str(),
            &crate::io::format_distance(r.d_to_f),
            &crate::io::format_distance(r.d_to_m),
            &r.score.to_string(),
            r.predicted.as_str(),
            r.actual.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Settings of a cohort-wide sex classification.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupConfig {
    pub kernel: KernelConfig,
    pub distance: DistanceForm,
    pub tau: f64,
    pub sign: SignConvention,
    pub threads: usize,
}

impl Default for GroupConfig {
    fn default() -> Self {
        GroupConfig {
            kernel: KernelConfig::default(),
            distance: DistanceForm::NegLog,
            tau: 0.0,
            sign: SignConvention::CloserGroup,
            threads: 1,
        }
    }
}

/// Distances of every image to the female and male supersets and the resulting predictions.
pub fn classify_cohort(engine: &CohortEngine<'_>, records: &[SubjectRecord], config: &GroupConfig) -> Result<Vec<GroupResult>> {
    let cohort = engine.cohort();
    let recs = record_index(cohort, records)?;
    let maxima = engine.keypoint_maxima_all(&config.kernel, config.kernel.mode, config.threads)?;
    let rows: Vec<Vec<f64>> = maxima.iter().map(|m| m.directed_row(cohort.len())).collect();
    let female = |r: &SubjectRecord| r.sex == Sex::F;
    let male = |r: &SubjectRecord| r.sex == Sex::M;
    (0..cohort.len())
        .map(|q| {
            let dist = |group: &str, pred: &dyn Fn(&SubjectRecord) -> bool| {
                let sup = superset_from(cohort, &recs, group, pred, q)?;
                superset_distance(q, cohort[q].len(), &maxima[q], &rows, &sup, config.distance)
            };
            let d_to_f = dist("F", &female)?;
            let d_to_m = dist("M", &male)?;
            Ok(GroupResult {
                subject_id: cohort[q].subject_id.clone(),
                d_to_f,
                d_to_m,
                score: group_score(d_to_f, d_to_m),
                predicted: classify_binary_group(d_to_f, d_to_m, config.tau, config.sign),
                actual: recs[q].sex,
            })
        })
        .collect()
}

/// ROC of the score `d_to_M - d_to_F` with Female as the positive class.
pub fn group_roc(results: &[GroupResult]) -> Result<RocCurve> {
    let (f, m): (Vec<&GroupResult>, Vec<&GroupResult>) = results.iter().partition(|r| r.actual == Sex::F);
    roc_from_scores(
        &f.iter().map(|r| r.score).collect::<Vec<_>>(),
        &m.iter().map(|r| r.score).collect::<Vec<_>>(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::pedigree::tests::rec;
    use crate::index::IndexMode;
    use crate::jaccard::mu_intersection_dense;
    use crate::model::{Keypoint, KernelMode, Zygosity};

    #[test]
    fn decision_rule() {
        let s = SignConvention::CloserGroup;
        assert_eq!(classify_binary_group(1.0, 1.0, 0.0, s), Sex::M);
        assert_eq!(classify_binary_group(1.0, 2.0, 0.0, s), Sex::F);
        assert_eq!(classify_binary_group(1.0, 2.0, 0.0, SignConvention::AsPrinted), Sex::M);
        assert_eq!(classify_binary_group(5.0, 0.1, f64::INFINITY, s), Sex::F);
        assert_eq!(classify_binary_group(0.1, 5.0, f64::NEG_INFINITY, s), Sex::M);
        assert_eq!(classify_binary_group(f64::INFINITY, f64::INFINITY, 0.0, s), Sex::M);
        for c in [0.0, 3.5, 100.0] {
            assert_eq!(classify_binary_group(1.0 + c, 1.2 + c, 0.1, s), classify_binary_group(1.0, 1.2, 0.1, s));
        }
    }

    #[test]
    fn dense_superset_example() {
        let k = vec![vec![0.9, 0.8]];
        let mu = mu_intersection_dense(&k);
        assert!((mu - 0.9).abs() < 1e-12);
        let j = soft_jaccard_index(mu, 1, 2).unwrap();
        assert!((j - 0.428571).abs() < 1e-6);
        assert!((jaccard_distance(j, DistanceForm::NegLog) - 0.847298).abs() < 1e-6);
    }

    fn set(id: &str, descs: &[[f32; 2]]) -> KeypointSet {
        let kps = descs
            .iter()
            .enumerate()
            .map(|(i, d)| Keypoint::new([i as f64, 0.0, 0.0], 1.0, d.to_vec()))
            .collect();
        KeypointSet::new(id, 2, kps).unwrap()
    }

    #[test]
    fn exclusions_and_sizes() {
        let mut recs = vec![
            rec("q", "F1", "m1", "f1", Zygosity::NotTwin),
            rec("b1", "F1", "m1", "f1", Zygosity::NotTwin),
            rec("b2", "F1", "m1", "x", Zygosity::NotTwin),
            rec("u1", "F2", "m2", "f2", Zygosity::NotTwin),
            rec("u2", "F3", "m3", "f3", Zygosity::NotTwin),
        ];
        for r in &mut recs {
            r.sex = Sex::M;
        }
        recs[3].sex = Sex::F;
        recs[4].sex = Sex::F;
        let cohort: Vec<_> = recs.iter().map(|r| set(&r.subject_id, &[[0.0, 1.0], [2.0, 3.0], [5.0, 1.0]])).collect();
        let males = build_group_superset(&cohort, &recs, "M", |r| r.sex == Sex::M, 0);
        assert!(matches!(males, Err(Error::EmptyGroup)));
        let females = build_group_superset(&cohort, &recs, "F", |r| r.sex == Sex::F, 0).unwrap();
        assert_eq!(females.len(), 2 * 3);
        assert_eq!(females.members, vec![3, 4]);
        let everyone = build_group_superset(&cohort, &recs, "all", |_| true, 0).unwrap();
        assert_eq!(everyone.excluded, vec!["q", "b1", "b2"]);
        assert!(everyone.provenance(&cohort).all(|(img, _)| img >= 3));
    }

    #[test]
    fn copy_in_group_gives_zero_and_no_support_gives_inf() {
        let a = set("a", &[[0.0, 0.0], [4.0, 0.0]]);
        let copy = set("c", &[[0.0, 0.0], [4.0, 0.0]]);
        let far = set("f", &[[100.0, 100.0]]);
        let cohort = vec![a, copy, far];
        let engine = CohortEngine::new(&cohort, IndexMode::Exact).unwrap();
        let cfg = KernelConfig::with_mode(KernelMode::SseApp, 1);
        let maxima = engine.keypoint_maxima_all(&cfg, cfg.mode, 1).unwrap();
        let rows: Vec<_> = maxima.iter().map(|m| m.directed_row(3)).collect();
        let recs: Vec<_> = ["a", "c", "f"]
            .iter()
            .enumerate()
            .map(|(i, id)| rec(id, &format!("F{i}"), "", "", Zygosity::NotTwin))
            .collect();
        let g = build_group_superset(&cohort, &recs, "G", |r| r.subject_id == "c", 0).unwrap();
        assert_eq!(superset_distance(0, 2, &maxima[0], &rows, &g, DistanceForm::NegLog).unwrap(), 0.0);
        let g = build_group_superset(&cohort, &recs, "G", |r| r.subject_id == "f", 0).unwrap();
        assert_eq!(
            superset_distance(0, 2, &maxima[0], &rows, &g, DistanceForm::NegLog).unwrap(),
            f64::INFINITY
        );
        // rows derived from maxima equal the engine's directed measures
        let directed = &engine.directed(&cfg, &[cfg.mode], 1).unwrap()[0];
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert_eq!(rows[a][b].to_bits(), directed.get(a, b).to_bits());
                }
            }
        }
    }

    #[test]
    fn roc_over_scores() {
        let r = |score: f64, actual| GroupResult {
            subject_id: "s".into(),
            d_to_f: 0.0,
            d_to_m: score,
            score,
            predicted: Sex::M,
            actual,
        };
        let results = vec![r(2.0, Sex::F), r(1.0, Sex::F), r(-1.0, Sex::M), r(0.5, Sex::M)];
        assert_eq!(group_roc(&results).unwrap().auc, 1.0);
        assert!(matches!(group_roc(&results[..2]), Err(Error::OneClassMissing)));
        let mut out = Vec::new();
        write_group_csv(&results[..1], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "subject_id,d_to_F,d_to_M,score,predicted,actual\ns,0,2,2,M,F\n"
        );
    }
}
