//! Directed soft measures, soft and hard Jaccard indices, and the pairwise
//! distance matrix over a cohort.
//!
//! The max over `B` for each keypoint of `A` is taken only over that keypoint's
//! kNN candidates; keypoints of `B` outside the list contribute nothing. With
//! `k` at least the number of external keypoints and exact search this equals
//! the untruncated maximum. Self-cardinalities are `|A|` and `|B|` exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{CorrespondenceList, DescriptorIndex, IndexMode, SearchScratch};
use crate::kernels::{appearance_from_distance, geometry_unchecked};
use crate::model::{DistanceMatrix, KernelConfig, KernelMode, KeypointSet};
use crate::parallel::map_indices;

/// Mapping from a Jaccard index to a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DistanceForm {
    /// `-ln J`, with `J = 0` mapped to `+inf`.
    #[default]
    NegLog,
    /// `1 - J`.
    OneMinus,
}

impl FromStr for DistanceForm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "neglog" => Ok(DistanceForm::NegLog),
            "oneminus" => Ok(DistanceForm::OneMinus),
            other => Err(format!("unknown distance form {other:?} (expected neglog, oneminus)")),
        }
    }
}

impl fmt::Display for DistanceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceForm::NegLog => "neglog",
            DistanceForm::OneMinus => "oneminus",
        })
    }
}

pub fn jaccard_distance(j: f64, form: DistanceForm) -> f64 {
    match form {
        DistanceForm::NegLog => {
            if j <= 0.0 {
                f64::INFINITY
            } else if j >= 1.0 {
                0.0
            } else {
                -j.ln()
            }
        }
        DistanceForm::OneMinus => (1.0 - j).clamp(0.0, 1.0),
    }
}

/// `mu(A∩B) / (|A| + |B| - mu(A∩B))`.
pub fn soft_jaccard_index(intersection: f64, size_a: usize, size_b: usize) -> Result<f64> {
    if size_a == 0 && size_b == 0 {
        return Err(Error::UndefinedForEmptyPair);
    }
    let union = size_a as f64 + size_b as f64 - intersection;
    Ok((intersection / union).clamp(0.0, 1.0))
}

/// Symmetrized intersection: the smaller of the two directed measures.
pub fn mu_intersection(mu_ab: f64, mu_ba: f64) -> f64 {
    mu_ab.min(mu_ba)
}

/// `sum_i max_j K[i][j]` over a dense kernel matrix (rows index `A`).
pub fn mu_directed_dense(kernels: &[Vec<f64>]) -> f64 {
    kernels
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .sum()
}

/// Both directed sums of a dense kernel matrix and their minimum.
pub fn mu_intersection_dense(kernels: &[Vec<f64>]) -> f64 {
    let cols = kernels.first().map_or(0, Vec::len);
    let transposed: Vec<Vec<f64>> = (0..cols)
        .map(|j| kernels.iter().map(|row| row[j]).collect())
        .collect();
    mu_intersection(mu_directed_dense(kernels), mu_directed_dense(&transposed))
}

/// kNN lists and appearance bandwidths of every keypoint of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCorrespondences {
    pub image: usize,
    pub lists: Vec<CorrespondenceList>,
    /// Appearance kernel denominator per keypoint; `+inf` when no external
    /// descriptor differs from the query (every candidate then has distance 0).
    pub bandwidths: Vec<f64>,
}

/// Per-keypoint best kernel value against each candidate image of one query image.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointMaxima {
    offsets: Vec<usize>,
    entries: Vec<(u32, f64)>,
}

impl KeypointMaxima {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(image, max kernel)` pairs of keypoint `i`, ascending by image.
    pub fn keypoint(&self, i: usize) -> &[(u32, f64)] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `mu(A -> B)` toward every image, accumulated in keypoint order.
    pub fn directed_row(&self, images: usize) -> Vec<f64> {
        let mut row = vec![0.0; images];
        for &(b, v) in &self.entries {
            row[b as usize] += v;
        }
        row
    }

    /// Directed measure toward the union of the images accepted by `member`.
    pub fn mu_to_union(&self, member: impl Fn(usize) -> bool) -> f64 {
        (0..self.len())
            .map(|i| {
                self.keypoint(i)
                    .iter()
                    .filter(|(img, _)| member(*img as usize))
                    .map(|(_, v)| *v)
                    .fold(0.0, f64::max)
            })
            .sum()
    }
}

/// `mu(A -> B)` for every ordered image pair under one kernel mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedMeasures {
    n: usize,
    values: Vec<f64>,
}

impl DirectedMeasures {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.n + b]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Settings of a full pairwise run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseConfig {
    pub kernel: KernelConfig,
    pub distance: DistanceForm,
    pub index: IndexMode,
    pub threads: usize,
}

impl Default for PairwiseConfig {
    fn default() -> Self {
        PairwiseConfig {
            kernel: KernelConfig::default(),
            distance: DistanceForm::NegLog,
            index: IndexMode::approximate(0),
            threads: 1,
        }
    }
}

/// A cohort with its descriptor index; shared read-only by all workers.
pub struct CohortEngine<'a> {
    cohort: &'a [KeypointSet],
    index: DescriptorIndex,
}

/// Reusable per-worker buffers for accumulation.
struct Accumulator {
    scratch: SearchScratch,
    best: Vec<f64>,
    touched: Vec<u32>,
}

impl<'a> CohortEngine<'a> {
    pub fn new(cohort: &'a [KeypointSet], mode: IndexMode) -> Result<Self> {
        Ok(CohortEngine {
            index: DescriptorIndex::build(cohort, mode)?,
            cohort,
        })
    }

    /// Reuses a prebuilt (for example, loaded) index; it must cover this cohort.
    pub fn with_index(cohort: &'a [KeypointSet], index: DescriptorIndex) -> Result<Self> {
        let sizes_match = index.image_count() == cohort.len()
            && cohort
                .iter()
                .enumerate()
                .all(|(i, s)| index.entry_id(i + 1, 0) - index.entry_id(i, 0) == s.len());
        if !sizes_match {
            return Err(Error::InvalidConfig("index does not match cohort".into()));
        }
        if let Some(s) = cohort.first() {
            if s.descriptor_dim != index.dim() {
                return Err(Error::DimMismatch {
                    expected: index.dim(),
                    found: s.descriptor_dim,
                });
            }
        }
        Ok(CohortEngine { cohort, index })
    }

    pub fn cohort(&self) -> &'a [KeypointSet] {
        self.cohort
    }

    pub fn index(&self) -> &DescriptorIndex {
        &self.index
    }

    fn accumulator(&self) -> Accumulator {
        Accumulator {
            scratch: self.index.scratch(),
            best: vec![f64::NAN; self.cohort.len()],
            touched: Vec::new(),
        }
    }

    /// kNN lists (own image excluded) and bandwidths for every keypoint of `image`.
    pub fn correspondences(
        &self,
        image: usize,
        config: &KernelConfig,
        scratch: &mut SearchScratch,
    ) -> Result<ImageCorrespondences> {
        let set = &self.cohort[image];
        let mut lists = Vec::with_capacity(set.len());
        let mut bandwidths = Vec::with_capacity(set.len());
        for kp in &set.keypoints {
            let list = self
                .index
                .query_knn(&kp.descriptor, config.k, Some(image as u32), scratch)?;
            let min_sq = match list.first_positive() {
                Some(d) => Some(d),
                None => match self.index.min_external_distance(&kp.descriptor, image as u32, scratch) {
                    Ok(d) => Some(d),
                    Err(Error::NoExternalNeighbor) => None,
                    Err(e) => return Err(e),
                },
            };
            bandwidths.push(min_sq.map_or(f64::INFINITY, |d| config.alpha.denominator(d)));
            lists.push(list);
        }
        Ok(ImageCorrespondences {
            image,
            lists,
            bandwidths,
        })
    }

    #[inline]
    fn candidate_kernel(
        &self,
        query: &crate::model::Keypoint,
        bandwidth: f64,
        rank: usize,
        cand: &crate::index::Candidate,
        mode: KernelMode,
        config: &KernelConfig,
    ) -> f64 {
        match mode {
            KernelMode::Hse => match config.hse_rank_limit {
                Some(limit) if rank >= limit => 0.0,
                _ => 1.0,
            },
            KernelMode::SseApp => appearance_from_distance(cand.distance, bandwidth),
            KernelMode::SseAppGeo => {
                let app = appearance_from_distance(cand.distance, bandwidth);
                if app == 0.0 {
                    return 0.0;
                }
                let other = &self.cohort[cand.image as usize].keypoints[cand.keypoint as usize];
                app * geometry_unchecked(query, other, config.geometry_bandwidth)
            }
        }
    }

    /// Calls `visit(i, &[(image, max)])` for each keypoint `i` in ascending order.
    fn for_each_maxima(
        &self,
        corr: &ImageCorrespondences,
        mode: KernelMode,
        config: &KernelConfig,
        acc: &mut Accumulator,
        mut visit: impl FnMut(usize, &[u32], &[f64]),
    ) {
        let set = &self.cohort[corr.image];
        for (i, list) in corr.lists.iter().enumerate() {
            let query = &set.keypoints[i];
            for (rank, cand) in list.candidates.iter().enumerate() {
                let v = self.candidate_kernel(query, corr.bandwidths[i], rank, cand, mode, config);
                let slot = &mut acc.best[cand.image as usize];
                if slot.is_nan() {
                    *slot = v;
                    acc.touched.push(cand.image);
                } else if v > *slot {
                    *slot = v;
                }
            }
            acc.touched.sort_unstable();
            visit(i, &acc.touched, &acc.best);
            for &b in &acc.touched {
                acc.best[b as usize] = f64::NAN;
            }
            acc.touched.clear();
        }
    }

    fn directed_row(
        &self,
        corr: &ImageCorrespondences,
        mode: KernelMode,
        config: &KernelConfig,
        acc: &mut Accumulator,
    ) -> Vec<f64> {
        let mut row = vec![0.0; self.cohort.len()];
        self.for_each_maxima(corr, mode, config, acc, |_, touched, best| {
            for &b in touched {
                row[b as usize] += best[b as usize];
            }
        });
        row[corr.image] = self.cohort[corr.image].len() as f64;
        row
    }

    /// Best kernel value per (keypoint, candidate image) for one query image.
    pub fn keypoint_maxima(
        &self,
        image: usize,
        config: &KernelConfig,
        mode: KernelMode,
    ) -> Result<KeypointMaxima> {
        let mut acc = self.accumulator();
        let corr = self.correspondences(image, config, &mut acc.scratch)?;
        let mut offsets = vec![0];
        let mut entries = Vec::new();
        self.for_each_maxima(&corr, mode, config, &mut acc, |_, touched, best| {
            entries.extend(touched.iter().map(|&b| (b, best[b as usize])));
            offsets.push(entries.len());
        });
        Ok(KeypointMaxima { offsets, entries })
    }

    /// Keypoint maxima of every image, computed in parallel.
    pub fn keypoint_maxima_all(
        &self,
        config: &KernelConfig,
        mode: KernelMode,
        threads: usize,
    ) -> Result<Vec<KeypointMaxima>> {
        config.validate()?;
        map_indices(
            self.cohort.len(),
            threads,
            || self.accumulator(),
            |acc, a| {
                let corr = self.correspondences(a, config, &mut acc.scratch)?;
                let mut offsets = vec![0];
                let mut entries = Vec::new();
                self.for_each_maxima(&corr, mode, config, acc, |_, touched, best| {
                    entries.extend(touched.iter().map(|&b| (b, best[b as usize])));
                    offsets.push(entries.len());
                });
                Ok(KeypointMaxima { offsets, entries })
            },
        )
    }

    /// `mu(A -> B)` for one ordered pair.
    pub fn mu_directed(&self, a: usize, b: usize, config: &KernelConfig) -> Result<f64> {
        if a == b {
            return Ok(self.cohort[a].len() as f64);
        }
        let mut acc = self.accumulator();
        let corr = self.correspondences(a, config, &mut acc.scratch)?;
        Ok(self.directed_row(&corr, config.mode, config, &mut acc)[b])
    }

    /// Soft Jaccard index of one pair under `config`.
    pub fn soft_jaccard(&self, a: usize, b: usize, config: &KernelConfig) -> Result<f64> {
        if a == b {
            return Ok(1.0);
        }
        let ab = self.mu_directed(a, b, config)?;
        let ba = self.mu_directed(b, a, config)?;
        soft_jaccard_index(
            mu_intersection(ab, ba),
            self.cohort[a].len(),
            self.cohort[b].len(),
        )
    }

    /// Directed measures for all ordered pairs, one matrix per requested mode.
    /// The kNN stage runs once and is shared across modes.
    pub fn directed(
        &self,
        config: &KernelConfig,
        modes: &[KernelMode],
        threads: usize,
    ) -> Result<Vec<DirectedMeasures>> {
        config.validate()?;
        if modes.contains(&KernelMode::SseAppGeo) && !config.assume_aligned {
            log::warn!("geometry kernel used on images not flagged as aligned");
        }
        let n = self.cohort.len();
        let rows = map_indices(
            n,
            threads,
            || self.accumulator(),
            |acc, a| {
                let corr = self.correspondences(a, config, &mut acc.scratch)?;
                Ok(modes
                    .iter()
                    .map(|&m| self.directed_row(&corr, m, config, acc))
                    .collect::<Vec<_>>())
            },
        )?;
        Ok((0..modes.len())
            .map(|m| DirectedMeasures {
                n,
                values: rows.iter().flat_map(|r| r[m].iter().copied()).collect(),
            })
            .collect())
    }

    /// Distance matrix from precomputed directed measures.
    pub fn distances_from(&self, directed: &DirectedMeasures, form: DistanceForm) -> Result<DistanceMatrix> {
        let ids = self.cohort.iter().map(|s| s.subject_id.clone()).collect();
        let mut failure = None;
        let m = DistanceMatrix::from_upper(ids, |a, b| {
            let j = soft_jaccard_index(
                mu_intersection(directed.get(a, b), directed.get(b, a)),
                self.cohort[a].len(),
                self.cohort[b].len(),
            );
            match j {
                Ok(j) => jaccard_distance(j, form),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => m,
        }
    }

    pub fn distance_matrix(&self, config: &KernelConfig, form: DistanceForm, threads: usize) -> Result<DistanceMatrix> {
        let directed = self.directed(config, &[config.mode], threads)?;
        self.distances_from(&directed[0], form)
    }

    /// One distance matrix per mode, sharing the kNN stage.
    pub fn distance_matrices(
        &self,
        config: &KernelConfig,
        modes: &[KernelMode],
        form: DistanceForm,
        threads: usize,
    ) -> Result<Vec<DistanceMatrix>> {
        self.directed(config, modes, threads)?
            .iter()
            .map(|d| self.distances_from(d, form))
            .collect()
    }
}

/// Hard Jaccard index of two images from their kNN lists: a keypoint of `A`
/// matches `B` when any candidate from `B` appears in its list (within the
/// optional rank limit); the intersection is the smaller directed count.
pub fn hard_jaccard_index(
    a: &ImageCorrespondences,
    b: &ImageCorrespondences,
    rank_limit: Option<usize>,
) -> Result<f64> {
    if a.image == b.image {
        return Ok(1.0);
    }
    let count = |from: &ImageCorrespondences, to: usize| {
        from.lists
            .iter()
            .filter(|l| {
                l.candidates
                    .iter()
                    .take(rank_limit.unwrap_or(usize::MAX))
                    .any(|c| c.image as usize == to)
            })
            .count()
    };
    let inter = count(a, b.image).min(count(b, a.image));
    soft_jaccard_index(inter as f64, a.lists.len(), b.lists.len())
}

/// Builds the index and computes the full matrix in one call.
pub fn pairwise_distance_matrix(cohort: &[KeypointSet], config: &PairwiseConfig) -> Result<DistanceMatrix> {
    let engine = CohortEngine::new(cohort, config.index)?;
    engine.distance_matrix(&config.kernel, config.distance, config.threads)
}
