//! Seeded generator of synthetic keypoint cohorts with family structure.
//!
//! Each subject's `m` keypoints are drawn from four sources:
//!
//! * common: a population pool of `2 * c` keypoints, `c` drawn per subject;
//! * group: a per-sex pool of `2 * g` keypoints, `g` drawn per subject;
//! * heritable: half drawn from the mother's template and half from the
//!   father's, each template sized so that two children of one parent share
//!   `sibling_share` of that parent's contribution in expectation
//!   (full siblings share `sibling_share`, half siblings half of it);
//! * individual: fresh keypoints.
//!
//! An MZ co-twin copies `mz_share` of the twin's keypoints before noise.
//! Observed keypoints perturb their template: Gaussian descriptor noise followed
//! by rank normalization, Gaussian location noise (mm) and log-normal scale jitter.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{write_keypoint_file, write_labels_csv, CohortManifest, ManifestEntry};
use crate::model::{Keypoint, KeypointSet, PairLabel, Sex, SubjectRecord, Zygosity};

/// Brain-like bounding box (mm).
pub const BOX_MM: [f64; 3] = [180.0, 220.0, 180.0];
pub const SCALE_RANGE_MM: (f64, f64) = (1.0, 16.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub seed: u64,
    pub n_families: usize,
    pub children_min: usize,
    pub children_max: usize,
    pub mz_probability: f64,
    pub dz_probability: f64,
    /// Probability that one non-twin child of a family has a different father.
    pub half_sibling_probability: f64,
    pub keypoints: usize,
    pub descriptor_dim: usize,
    pub mz_share: f64,
    pub sibling_share: f64,
    pub common_fraction: f64,
    pub group_fraction: f64,
    pub individual_fraction: f64,
    pub descriptor_noise: f64,
    pub location_noise: f64,
    pub scale_jitter: f64,
    pub female_probability: f64,
    pub races: Vec<(String, f64)>,
    pub age_range: (f64, f64),
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            seed: 0,
            n_families: 50,
            children_min: 2,
            children_max: 4,
            mz_probability: 0.3,
            dz_probability: 0.15,
            half_sibling_probability: 0.3,
            keypoints: 200,
            descriptor_dim: crate::model::DEFAULT_DESCRIPTOR_DIM,
            mz_share: 1.0,
            sibling_share: 0.5,
            common_fraction: 0.5,
            group_fraction: 0.1,
            individual_fraction: 0.1,
            descriptor_noise: 0.25,
            location_noise: 1.0,
            scale_jitter: 0.05,
            female_probability: 0.5,
            races: vec![("white".into(), 0.7), ("black".into(), 0.2), ("asian".into(), 0.1)],
            age_range: (22.0, 36.0),
        }
    }
}

struct Counts {
    common: usize,
    group: usize,
    individual: usize,
    from_mother: usize,
    from_father: usize,
    template: usize,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        let fractions = [
            ("mz_probability", self.mz_probability),
            ("dz_probability", self.dz_probability),
            ("half_sibling_probability", self.half_sibling_probability),
            ("mz_share", self.mz_share),
            ("common_fraction", self.common_fraction),
            ("group_fraction", self.group_fraction),
            ("individual_fraction", self.individual_fraction),
            ("female_probability", self.female_probability),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.sibling_share > 0.0 && self.sibling_share <= 1.0) {
            return bad("sibling_share must lie in (0, 1]");
        }
        if self.mz_probability + self.dz_probability > 1.0 {
            return bad("mz_probability + dz_probability exceeds 1");
        }
        if self.common_fraction + self.group_fraction + self.individual_fraction > 1.0 + 1e-12 {
            return bad("keypoint fractions exceed 1");
        }
        for (name, v) in [
            ("descriptor_noise", self.descriptor_noise),
            ("location_noise", self.location_noise),
            ("scale_jitter", self.scale_jitter),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be a finite non-negative number"));
            }
        }
        if self.n_families == 0 || self.children_min == 0 || self.children_min > self.children_max {
            return bad("need at least one family and 1 <= children_min <= children_max");
        }
        if self.keypoints == 0 || self.descriptor_dim < 2 {
            return bad("need keypoints >= 1 and descriptor_dim >= 2");
        }
        if self.races.is_empty() || self.races.iter().any(|(_, p)| !(*p >= 0.0)) || self.races.iter().all(|(_, p)| *p == 0.0) {
            return bad("races need non-negative weights with a positive total");
        }
        if !(self.age_range.0 <= self.age_range.1) {
            return bad("age_range must be ordered");
        }
        Ok(())
    }

    fn counts(&self) -> Counts {
        let m = self.keypoints;
        let round = |f: f64| (f * m as f64).round() as usize;
        let common = round(self.common_fraction).min(m);
        let group = round(self.group_fraction).min(m - common);
        let individual = round(self.individual_fraction).min(m - common - group);
        let heritable = m - common - group - individual;
        let from_mother = heritable / 2;
        let from_father = heritable - from_mother;
        let template = ((from_father as f64) / self.sibling_share).round() as usize;
        Counts {
            common,
            group,
            individual,
            from_mother,
            from_father,
            template: template.max(from_father),
        }
    }
}

/// Generated subjects with the generator's own pair labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub sets: Vec<KeypointSet>,
    pub records: Vec<SubjectRecord>,
    /// Labels of pairs `i < j` that are not UR, from the generator's pedigree.
    pub related: BTreeMap<(usize, usize), PairLabel>,
}

impl SyntheticCohort {
    pub fn truth(&self, i: usize, j: usize) -> PairLabel {
        let key = if i < j { (i, j) } else { (j, i) };
        self.related.get(&key).copied().unwrap_or(PairLabel::Ur)
    }

    /// Writes `keypoints/<id>.skj`, `labels.csv`, `pair_labels.csv` and `cohort.toml`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let kp_dir = dir.join("keypoints");
        std::fs::create_dir_all(&kp_dir).map_err(|e| Error::io(&kp_dir, e))?;
        let mut entries = Vec::new();
        for s in &self.sets {
            let rel = Path::new("keypoints").join(format!("{}.skj", s.subject_id));
            write_keypoint_file(s, dir.join(&rel))?;
            entries.push(ManifestEntry {
                id: s.subject_id.clone(),
                keypoints: rel,
            });
        }
        write_labels_csv(&self.records, dir.join("labels.csv"))?;
        let path = dir.join("pair_labels.csv");
        let mut text = String::from("subject_a,subject_b,label\n");
        let n = self.sets.len();
        for i in 0..n {
            for j in (i + 1)..n {
                text.push_str(&format!(
                    "{},{},{}\n",
                    self.sets[i].subject_id,
                    self.sets[j].subject_id,
                    self.truth(i, j)
                ));
            }
        }
        std::fs::File::create(&path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| Error::io(&path, e))?;
        CohortManifest {
            labels: "labels.csv".into(),
            subjects: entries,
        }
        .save(dir.join("cohort.toml"))
    }
}

/// Noise-free keypoint: raw descriptor before ranking.
#[derive(Clone)]
struct Template {
    location: [f64; 3],
    scale: f64,
    raw: Vec<f64>,
}

struct Generator<'a> {
    spec: &'a CohortSpec,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn template(&mut self) -> Template {
        let (lo, hi) = (SCALE_RANGE_MM.0.ln(), SCALE_RANGE_MM.1.ln());
        Template {
            location: [
                self.rng.random_range(0.0..BOX_MM[0]),
                self.rng.random_range(0.0..BOX_MM[1]),
                self.rng.random_range(0.0..BOX_MM[2]),
            ],
            scale: self.rng.random_range(lo..hi).exp(),
            raw: (0..self.spec.descriptor_dim).map(|_| self.rng.sample(StandardNormal)).collect(),
        }
    }

    fn pool(&mut self, n: usize) -> Vec<Template> {
        (0..n).map(|_| self.template()).collect()
    }

    fn draw(&mut self, pool: &[Template], n: usize) -> Vec<Template> {
        sample(&mut self.rng, pool.len(), n).iter().map(|i| pool[i].clone()).collect()
    }

    /// Ranks of `raw + noise`, scaled to `[0, 1]`.
    fn observe(&mut self, t: &Template) -> Keypoint {
        let s = self.spec;
        let normal = |sd: f64| Normal::new(0.0, sd).expect("validated sd");
        let dn = normal(s.descriptor_noise);
        let noisy: Vec<f64> = t.raw.iter().map(|v| v + dn.sample(&mut self.rng)).collect();
        let mut order: Vec<usize> = (0..noisy.len()).collect();
        order.sort_by(|&a, &b| noisy[a].total_cmp(&noisy[b]).then(a.cmp(&b)));
        let mut descriptor = vec![0f32; noisy.len()];
        let top = (noisy.len() - 1) as f32;
        for (rank, &i) in order.iter().enumerate() {
            descriptor[i] = rank as f32 / top;
        }
        let ln = normal(s.location_noise);
        let location = [
            t.location[0] + ln.sample(&mut self.rng),
            t.location[1] + ln.sample(&mut self.rng),
            t.location[2] + ln.sample(&mut self.rng),
        ];
        let scale = t.scale * normal(s.scale_jitter).sample(&mut self.rng).exp();
        Keypoint::new(location, scale, descriptor)
    }
}

struct Child {
    family: usize,
    mother: String,
    father: String,
    zygosity: Zygosity,
    /// Index of the co-twin's child slot within the family.
    twin_of: Option<usize>,
    sex: Sex,
    age: f64,
}

fn pick_race(rng: &mut ChaCha8Rng, races: &[(String, f64)]) -> String {
    let total: f64 = races.iter().map(|(_, p)| p).sum();
    let mut u = rng.random_range(0.0..total);
    for (name, p) in races {
        if u < *p {
            return name.clone();
        }
        u -= p;
    }
    races.last().expect("validated").0.clone()
}

/// Deterministic for a fixed spec.
pub fn generate_cohort(spec: &CohortSpec) -> Result<SyntheticCohort> {
    spec.validate()?;
    let counts = spec.counts();
    let mut g = Generator {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
    };
    let common_pool = g.pool(2 * counts.common);
    let sex_pools = [g.pool(2 * counts.group), g.pool(2 * counts.group)];
    let sex_index = |s: Sex| if s == Sex::F { 0 } else { 1 };

    let mut sets = Vec::new();
    let mut records = Vec::new();
    let mut related = BTreeMap::new();
    for fam in 1..=spec.n_families {
        let family_id = format!("F{fam:03}");
        let mother_id = format!("{family_id}_M");
        let father_id = format!("{family_id}_P");
        let mother_t = g.pool(counts.template);
        let father_t = g.pool(counts.template);
        let race = pick_race(&mut g.rng, &spec.races);
        let n = g.rng.random_range(spec.children_min..=spec.children_max);
        let twin_kind = {
            let u: f64 = g.rng.random();
            if n < 2 {
                None
            } else if u < spec.mz_probability {
                Some(Zygosity::Mz)
            } else if u < spec.mz_probability + spec.dz_probability {
                Some(Zygosity::Dz)
            } else {
                None
            }
        };
        let non_twins = if twin_kind.is_some() { n - 2 } else { n };
        let half = n >= 2 && non_twins >= 1 && g.rng.random_bool(spec.half_sibling_probability);
        let half_slot = if half { Some(n - 1) } else { None };
        let second_father = half.then(|| (format!("{family_id}_P2"), g.pool(counts.template)));

        let (age_lo, age_hi) = spec.age_range;
        let mut children: Vec<Child> = Vec::with_capacity(n);
        for slot in 0..n {
            let twin = twin_kind.filter(|_| slot < 2);
            let father = match (&second_father, half_slot) {
                (Some((id, _)), Some(h)) if h == slot => id.clone(),
                _ => father_id.clone(),
            };
            let twin_of = if twin.is_some() && slot == 1 { Some(0) } else { None };
            let sex = match (twin, twin_of) {
                (Some(Zygosity::Mz), Some(t)) => children[t].sex,
                _ => {
                    if g.rng.random_bool(spec.female_probability) {
                        Sex::F
                    } else {
                        Sex::M
                    }
                }
            };
            let age = match twin_of {
                Some(t) => children[t].age,
                None => (g.rng.random_range(age_lo..=age_hi) * 10.0).round() / 10.0,
            };
            children.push(Child {
                family: fam,
                mother: mother_id.clone(),
                father,
                zygosity: twin.unwrap_or(Zygosity::NotTwin),
                twin_of,
                sex,
                age,
            });
        }

        let base = sets.len();
        let mut templates: Vec<Vec<Template>> = Vec::with_capacity(n);
        for (slot, c) in children.iter().enumerate() {
            let paternal = match (&second_father, half_slot) {
                (Some((_, t)), Some(h)) if h == slot => t,
                _ => &father_t,
            };
            let mut kps = g.draw(&common_pool, counts.common);
            kps.extend(g.draw(&sex_pools[sex_index(c.sex)], counts.group));
            kps.extend(g.draw(&mother_t, counts.from_mother));
            kps.extend(g.draw(paternal, counts.from_father));
            kps.extend(g.pool(counts.individual));
            if let (Zygosity::Mz, Some(t)) = (c.zygosity, c.twin_of) {
                let copies = (spec.mz_share * kps.len() as f64).round() as usize;
                for i in sample(&mut g.rng, kps.len(), copies).iter() {
                    kps[i] = templates[t][i].clone();
                }
            }
            templates.push(kps);
        }
        for (slot, c) in children.iter().enumerate() {
            let id = format!("S{:04}", base + slot + 1);
            let keypoints = templates[slot].iter().map(|t| g.observe(t)).collect();
            sets.push(KeypointSet::new(id.clone(), spec.descriptor_dim, keypoints)?);
            records.push(SubjectRecord {
                subject_id: id,
                family_id: format!("F{:03}", c.family),
                mother_id: c.mother.clone(),
                father_id: c.father.clone(),
                zygosity: c.zygosity,
                sex: c.sex,
                race: race.clone(),
                age: c.age,
            });
        }
        for a in 0..n {
            for b in (a + 1)..n {
                let (ca, cb) = (&children[a], &children[b]);
                let label = if cb.twin_of == Some(a) {
                    if ca.zygosity == Zygosity::Mz {
                        PairLabel::Mz
                    } else {
                        PairLabel::Dz
                    }
                } else if ca.father == cb.father {
                    PairLabel::Fs
                } else {
                    PairLabel::Hs
                };
                related.insert((base + a, base + b), label);
            }
        }
    }
    Ok(SyntheticCohort { sets, records, related })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::derive_pair_labels;

    fn small() -> CohortSpec {
        CohortSpec {
            n_families: 12,
            keypoints: 40,
            descriptor_dim: 8,
            seed: 11,
            ..CohortSpec::default()
        }
    }

    #[test]
    fn deterministic_and_sized() {
        let a = generate_cohort(&small()).unwrap();
        let b = generate_cohort(&small()).unwrap();
        assert_eq!(a, b);
        assert!(a.sets.iter().all(|s| s.len() == 40 && s.descriptor_dim == 8));
        let other = generate_cohort(&CohortSpec { seed: 12, ..small() }).unwrap();
        assert_ne!(a.sets, other.sets);
    }

    #[test]
    fn truth_matches_derived_labels() {
        for seed in 0..10 {
            let c = generate_cohort(&CohortSpec { seed, ..small() }).unwrap();
            let derived = derive_pair_labels(&c.records);
            assert!(derived.issues.is_empty());
            for (i, j, label) in derived.iter() {
                assert_eq!(label, c.truth(i, j), "pair ({i}, {j}) seed {seed}");
            }
        }
    }

    #[test]
    fn zero_noise_mz_twins_are_identical() {
        let spec = CohortSpec {
            descriptor_noise: 0.0,
            location_noise: 0.0,
            scale_jitter: 0.0,
            mz_probability: 1.0,
            dz_probability: 0.0,
            ..small()
        };
        let c = generate_cohort(&spec).unwrap();
        let (&(a, b), _) = c.related.iter().find(|(_, l)| **l == PairLabel::Mz).unwrap();
        assert_eq!(c.sets[a].keypoints, c.sets[b].keypoints);
    }

    #[test]
    fn rejects_invalid_specs() {
        for bad in [
            CohortSpec { common_fraction: 1.5, ..small() },
            CohortSpec { common_fraction: 0.6, group_fraction: 0.3, individual_fraction: 0.3, ..small() },
            CohortSpec { descriptor_noise: -1.0, ..small() },
            CohortSpec { sibling_share: 0.0, ..small() },
            CohortSpec { children_min: 3, children_max: 2, ..small() },
        ] {
            assert!(matches!(generate_cohort(&bad), Err(Error::InvalidSpec(_))));
        }
    }

    #[test]
    fn written_tree_reads_back() {
        let c = generate_cohort(&small()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        c.write_to_dir(dir.path()).unwrap();
        let m = CohortManifest::load(dir.path().join("cohort.toml")).unwrap();
        assert_eq!(m.read_cohort().unwrap(), c.sets);
        assert_eq!(crate::io::read_labels_csv(&m.labels).unwrap(), c.records);
        let pairs = std::fs::read_to_string(dir.path().join("pair_labels.csv")).unwrap();
        let n = c.sets.len();
        assert_eq!(pairs.lines().count(), 1 + n * (n - 1) / 2);
    }
}
