//! Pair labels from parent identity and twin status.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DistanceMatrix, PairLabel, Sex, SubjectRecord, Zygosity};

/// Record whose twin flag disagrees with its parents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PedigreeIssue {
    pub subject_a: String,
    pub subject_b: String,
    pub reason: String,
}

fn same_known(a: &str, b: &str) -> bool {
    !a.is_empty() && a == b
}

/// Label of one pair plus an issue when the pair is flagged as twins of
/// one family but does not share both parents (such pairs default to UR).
pub fn pair_label(a: &SubjectRecord, b: &SubjectRecord) -> (PairLabel, Option<PedigreeIssue>) {
    let mother = same_known(&a.mother_id, &b.mother_id);
    let father = same_known(&a.father_id, &b.father_id);
    let twin_flag = match (a.zygosity, b.zygosity) {
        (Zygosity::Mz, Zygosity::Mz) => Some(PairLabel::Mz),
        (Zygosity::Dz, Zygosity::Dz) => Some(PairLabel::Dz),
        _ => None,
    };
    let same_family = same_known(&a.family_id, &b.family_id);
    let label = match (mother, father) {
        (true, true) => match twin_flag {
            Some(PairLabel::Mz) if same_family => PairLabel::Mz,
            Some(PairLabel::Dz) => PairLabel::Dz,
            _ => PairLabel::Fs,
        },
        (true, false) | (false, true) => PairLabel::Hs,
        (false, false) => PairLabel::Ur,
    };
    if let Some(flag) = twin_flag {
        if same_family && !(mother && father) {
            let issue = PedigreeIssue {
                subject_a: a.subject_id.clone(),
                subject_b: b.subject_id.clone(),
                reason: format!("both flagged {flag} in family {} without shared parents", a.family_id),
            };
            return (PairLabel::Ur, Some(issue));
        }
    }
    (label, None)
}

/// Labels of every unordered pair `i < j` in record order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLabels {
    pub n: usize,
    labels: Vec<PairLabel>,
    pub issues: Vec<PedigreeIssue>,
}

impl PairLabels {
    fn offset(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> PairLabel {
        self.labels[self.offset(i, j)]
    }

    /// `(i, j, label)` in row order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, PairLabel)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j, self.get(i, j))))
    }

    /// Pair counts in `PairLabel::ALL` order.
    pub fn counts(&self) -> [usize; 5] {
        let mut c = [0; 5];
        for l in &self.labels {
            c[PairLabel::ALL.iter().position(|x| x == l).expect("label in ALL")] += 1;
        }
        c
    }
}

pub fn derive_pair_labels(records: &[SubjectRecord]) -> PairLabels {
    let n = records.len();
    let mut labels = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut issues = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (label, issue) = pair_label(&records[i], &records[j]);
            labels.push(label);
            issues.extend(issue);
        }
    }
    PairLabels { n, labels, issues }
}

/// One distinct-subject pair of a distance matrix with its label and covariates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledPair {
    pub subject_a: String,
    pub subject_b: String,
    pub label: PairLabel,
    pub distance: f64,
    pub delta_age: f64,
    pub same_sex: bool,
    pub same_race: bool,
    pub sexes: (Sex, Sex),
}

/// Labeled pairs of a matrix; pairs of two images of one subject are kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable {
    pub pairs: Vec<LabeledPair>,
    pub same_subject: Vec<(String, f64)>,
    pub issues: Vec<PedigreeIssue>,
}

impl PairTable {
    pub fn distances(&self, label: PairLabel) -> Vec<f64> {
        self.pairs.iter().filter(|p| p.label == label).map(|p| p.distance).collect()
    }

    pub fn write_csv(&self, out: impl std::io::Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["subject_a", "subject_b", "label", "distance", "delta_age", "same_sex", "same_race"])?;
        for p in &self.pairs {
            w.write_record([
                p.subject_a.as_str(),
                &p.subject_b,
                p.label.as_str(),
                &crate::io::format_distance(p.distance),
                &p.delta_age.to_string(),
                if p.same_sex { "1" } else { "0" },
                if p.same_race { "1" } else { "0" },
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn label_pairs(matrix: &DistanceMatrix, records: &[SubjectRecord]) -> Result<PairTable> {
    let by_id: HashMap<&str, &SubjectRecord> = records.iter().map(|r| (r.subject_id.as_str(), r)).collect();
    let rec: Vec<&SubjectRecord> = matrix
        .subject_ids()
        .iter()
        .map(|id| by_id.get(id.as_str()).copied().ok_or_else(|| Error::UnknownSubject(id.clone())))
        .collect::<Result<_>>()?;
    let mut table = PairTable {
        pairs: Vec::new(),
        same_subject: Vec::new(),
        issues: Vec::new(),
    };
    for (i, j, d) in matrix.pairs() {
        let (a, b) = (rec[i], rec[j]);
        if a.subject_id == b.subject_id {
            table.same_subject.push((a.subject_id.clone(), d));
            continue;
        }
        let (label, issue) = pair_label(a, b);
        table.issues.extend(issue);
        table.pairs.push(LabeledPair {
            subject_a: a.subject_id.clone(),
            subject_b: b.subject_id.clone(),
            label,
            distance: d,
            delta_age: (a.age - b.age).abs(),
            same_sex: a.sex == b.sex,
            same_race: a.race == b.race,
            sexes: (a.sex, b.sex),
        });
    }
    Ok(table)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn rec(id: &str, fam: &str, mother: &str, father: &str, z: Zygosity) -> SubjectRecord {
        SubjectRecord {
            subject_id: id.into(),
            family_id: fam.into(),
            mother_id: mother.into(),
            father_id: father.into(),
            zygosity: z,
            sex: Sex::F,
            race: "r".into(),
            age: 30.0,
        }
    }

    #[test]
    fn rule_clauses() {
        use Zygosity::*;
        let a = rec("a", "F1", "m", "f", Mz);
        assert_eq!(pair_label(&a, &rec("b", "F1", "m", "f", Mz)).0, PairLabel::Mz);
        assert_eq!(pair_label(&a, &rec("b", "F1", "m", "f", Dz)).0, PairLabel::Fs);
        assert_eq!(
            pair_label(&rec("a", "F1", "m", "f", Dz), &rec("b", "F1", "m", "f", Dz)).0,
            PairLabel::Dz
        );
        assert_eq!(pair_label(&a, &rec("b", "F1", "m", "g", NotTwin)).0, PairLabel::Hs);
        assert_eq!(pair_label(&a, &rec("b", "F1", "x", "f", NotTwin)).0, PairLabel::Hs);
        assert_eq!(pair_label(&a, &rec("b", "F2", "x", "y", NotTwin)).0, PairLabel::Ur);
        // unknown parents never match
        let u = rec("u", "F3", "", "", NotTwin);
        assert_eq!(pair_label(&u, &rec("v", "F3", "", "", NotTwin)).0, PairLabel::Ur);
        let (label, issue) = pair_label(&a, &rec("b", "F1", "other", "f", Mz));
        assert_eq!(label, PairLabel::Ur);
        assert!(issue.is_some());
    }

    /// 134 MZ and 71 DZ families of three children, 44 half-sibling pairs,
    /// 32 families of four and 5 of two, and 169 singletons.
    pub(crate) fn hcp_scale_records() -> Vec<SubjectRecord> {
        let mut out = Vec::new();
        let mut fam = 0;
        let push = |out: &mut Vec<SubjectRecord>, fam: usize, mother: String, father: String, z| {
            let id = format!("S{:04}", out.len());
            out.push(rec(&id, &format!("F{fam}"), &mother, &father, z));
        };
        for (count, z) in [(134, Zygosity::Mz), (71, Zygosity::Dz)] {
            for _ in 0..count {
                fam += 1;
                let (m, f) = (format!("m{fam}"), format!("f{fam}"));
                push(&mut out, fam, m.clone(), f.clone(), z);
                push(&mut out, fam, m.clone(), f.clone(), z);
                push(&mut out, fam, m, f, Zygosity::NotTwin);
            }
        }
        for _ in 0..44 {
            fam += 1;
            let m = format!("m{fam}");
            push(&mut out, fam, m.clone(), format!("f{fam}a"), Zygosity::NotTwin);
            push(&mut out, fam, m, format!("f{fam}b"), Zygosity::NotTwin);
        }
        for (families, children) in [(32, 4), (5, 2), (169, 1)] {
            for _ in 0..families {
                fam += 1;
                for _ in 0..children {
                    push(&mut out, fam, format!("m{fam}"), format!("f{fam}"), Zygosity::NotTwin);
                }
            }
        }
        out
    }

    #[test]
    fn hcp_scale_totals() {
        let recs = hcp_scale_records();
        assert_eq!(recs.len(), 1010);
        let labels = derive_pair_labels(&recs);
        assert_eq!(labels.counts(), [134, 71, 607, 44, 508689]);
        assert_eq!(labels.counts().iter().sum::<usize>(), 509545);
        assert!(labels.issues.is_empty());
        assert_eq!(labels.iter().count(), 509545);
        assert_eq!(labels.get(1, 0), PairLabel::Mz);
    }

    #[test]
    fn table_separates_same_subject_pairs() {
        let recs = vec![rec("a", "F1", "m", "f", Zygosity::Mz), rec("b", "F1", "m", "f", Zygosity::Mz)];
        let ids = vec!["a".to_string(), "b".to_string(), "a".to_string()];
        let m = DistanceMatrix::from_upper(ids, |i, j| (i + j) as f64).unwrap();
        let t = label_pairs(&m, &recs).unwrap();
        assert_eq!(t.pairs.len(), 2);
        assert_eq!(t.same_subject, vec![("a".to_string(), 2.0)]);
        assert_eq!(t.distances(PairLabel::Mz), vec![1.0, 3.0]);
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("subject_a,subject_b,label,distance,delta_age,same_sex,same_race\na,b,MZ,1,0,1,1\n"));
        let missing = DistanceMatrix::from_upper(vec!["a".into(), "z".into()], |_, _| 1.0).unwrap();
        assert!(matches!(label_pairs(&missing, &recs), Err(Error::UnknownSubject(_))));
    }
}
