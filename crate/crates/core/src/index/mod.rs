//! Nearest-neighbor index over every descriptor of a cohort.
//!
//! Exact mode uses one kd-tree with median splits and exact pruning. Approximate
//! mode uses a seeded forest of randomized kd-trees searched best-bin-first
//! under a leaf-check budget. Distances are always squared Euclidean and are
//! computed exactly; only the candidate set is approximate.

mod kdtree;
mod serialize;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::squared_distance;
use crate::model::{AlphaConvention, KeypointSet};

use kdtree::KdTree;

/// Search structure selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexMode {
    Exact,
    Approximate { trees: usize, checks: usize, seed: u64 },
}

impl IndexMode {
    pub fn approximate(seed: u64) -> Self {
        IndexMode::Approximate {
            trees: 4,
            checks: 1024,
            seed,
        }
    }
}

/// Location of one indexed keypoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EntryRef {
    pub image: u32,
    pub keypoint: u32,
}

/// One kNN candidate with its squared descriptor distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub image: u32,
    pub keypoint: u32,
    pub distance: f64,
}

/// Ranked kNN candidates of one query keypoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceList {
    pub candidates: Vec<Candidate>,
    pub k: usize,
    pub excluded_image: Option<u32>,
}

impl CorrespondenceList {
    /// Smallest positive distance in the list, if any.
    pub fn first_positive(&self) -> Option<f64> {
        self.candidates
            .iter()
            .map(|c| c.distance)
            .find(|d| *d > 0.0)
    }
}

/// Per-query reusable buffers. Create one per worker thread.
pub struct SearchScratch {
    stamps: Vec<u32>,
    epoch: u32,
    heap: Vec<(f64, u32)>,
    branches: std::collections::BinaryHeap<kdtree::Branch>,
    offsets: Vec<f64>,
}

impl SearchScratch {
    fn next_epoch(&mut self, n: usize) -> u32 {
        if self.stamps.len() != n {
            self.stamps = vec![0; n];
            self.epoch = 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamps.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.epoch
    }
}

/// Immutable kNN index over all keypoints of a cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorIndex {
    dim: usize,
    mode: IndexMode,
    entries: Vec<EntryRef>,
    image_offsets: Vec<usize>,
    data: Vec<f32>,
    trees: Vec<KdTree>,
}

/// Bounded result set ordered by `(distance, entry id)`; id order equals
/// `(image, keypoint)` order because entries are laid out image by image.
pub(crate) struct KBest<'a> {
    k: usize,
    items: &'a mut Vec<(f64, u32)>,
}

#[inline]
fn cmp_item(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl<'a> KBest<'a> {
    fn new(k: usize, items: &'a mut Vec<(f64, u32)>) -> Self {
        items.clear();
        KBest { k, items }
    }

    #[inline]
    pub(crate) fn full(&self) -> bool {
        self.items.len() >= self.k
    }

    /// Distance an entry must not exceed to possibly enter the set.
    #[inline]
    pub(crate) fn worst(&self) -> f64 {
        if self.full() {
            self.items[self.items.len() - 1].0
        } else {
            f64::INFINITY
        }
    }

    #[inline]
    pub(crate) fn offer(&mut self, d: f64, id: u32) {
        let item = (d, id);
        if self.full() {
            if cmp_item(&item, &self.items[self.items.len() - 1]) != Ordering::Less {
                return;
            }
            self.items.pop();
        }
        let pos = self
            .items
            .partition_point(|x| cmp_item(x, &item) == Ordering::Less);
        self.items.insert(pos, item);
    }
}

impl DescriptorIndex {
    /// Indexes every keypoint of every set exactly once.
    pub fn build(cohort: &[KeypointSet], mode: IndexMode) -> Result<Self> {
        let first = cohort.first().ok_or(Error::EmptyCohort)?;
        let dim = first.descriptor_dim;
        let total: usize = cohort.iter().map(|s| s.len()).sum();
        if total > u32::MAX as usize || cohort.len() > u32::MAX as usize {
            return Err(Error::InvalidConfig("cohort too large for 32-bit entry ids".into()));
        }
        let mut entries = Vec::with_capacity(total);
        let mut image_offsets = Vec::with_capacity(cohort.len() + 1);
        let mut data = Vec::with_capacity(total * dim);
        for (image, set) in cohort.iter().enumerate() {
            image_offsets.push(entries.len());
            for (keypoint, kp) in set.keypoints.iter().enumerate() {
                if set.descriptor_dim != dim || kp.descriptor.len() != dim {
                    return Err(Error::DimMismatch {
                        expected: dim,
                        found: if set.descriptor_dim != dim {
                            set.descriptor_dim
                        } else {
                            kp.descriptor.len()
                        },
                    });
                }
                entries.push(EntryRef {
                    image: image as u32,
                    keypoint: keypoint as u32,
                });
                data.extend_from_slice(&kp.descriptor);
            }
            if set.descriptor_dim != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: set.descriptor_dim,
                });
            }
        }
        image_offsets.push(entries.len());
        let trees = match mode {
            IndexMode::Exact => vec![KdTree::build_exact(&data, dim)],
            IndexMode::Approximate { trees, checks, seed } => {
                if trees == 0 || checks == 0 {
                    return Err(Error::InvalidConfig(
                        "approximate index needs at least one tree and one check".into(),
                    ));
                }
                (0..trees)
                    .map(|t| KdTree::build_randomized(&data, dim, seed.wrapping_add(t as u64)))
                    .collect()
            }
        };
        Ok(DescriptorIndex {
            dim,
            mode,
            entries,
            image_offsets,
            data,
            trees,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn image_count(&self) -> usize {
        self.image_offsets.len() - 1
    }

    pub fn entry(&self, id: usize) -> EntryRef {
        self.entries[id]
    }

    /// Global entry id of keypoint `keypoint` of image `image`.
    pub fn entry_id(&self, image: usize, keypoint: usize) -> usize {
        self.image_offsets[image] + keypoint
    }

    pub fn descriptor(&self, id: usize) -> &[f32] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn scratch(&self) -> SearchScratch {
        SearchScratch {
            stamps: vec![0; self.entries.len()],
            epoch: 0,
            heap: Vec::new(),
            branches: Default::default(),
            offsets: vec![0.0; self.dim],
        }
    }

    fn check_query(&self, query: &[f32]) -> Result<()> {
        if query.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        Ok(())
    }

    fn search(
        &self,
        query: &[f32],
        k: usize,
        accept: &dyn Fn(u32, f64) -> bool,
        scratch: &mut SearchScratch,
    ) -> Vec<(f64, u32)> {
        let epoch = scratch.next_epoch(self.entries.len());
        let SearchScratch {
            stamps,
            heap,
            branches,
            offsets,
            ..
        } = scratch;
        let mut best = KBest::new(k, heap);
        match self.mode {
            IndexMode::Exact => {
                offsets.iter_mut().for_each(|o| *o = 0.0);
                self.trees[0].search_exact(&self.data, self.dim, query, accept, &mut best, offsets);
            }
            IndexMode::Approximate { checks, .. } => {
                kdtree::search_forest(
                    &self.trees,
                    &self.data,
                    self.dim,
                    query,
                    accept,
                    &mut best,
                    checks.max(k),
                    stamps,
                    epoch,
                    branches,
                );
            }
        }
        best.items.clone()
    }

    /// Up to `k` nearest entries by squared descriptor distance, ascending, ties
    /// by `(image, keypoint)`. Entries of `exclude_image` are never returned.
    pub fn query_knn(
        &self,
        query: &[f32],
        k: usize,
        exclude_image: Option<u32>,
        scratch: &mut SearchScratch,
    ) -> Result<CorrespondenceList> {
        self.check_query(query)?;
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let entries = &self.entries;
        let accept = move |id: u32, _d: f64| Some(entries[id as usize].image) != exclude_image;
        let found = self.search(query, k, &accept, scratch);
        Ok(CorrespondenceList {
            candidates: found
                .into_iter()
                .map(|(distance, id)| {
                    let e = self.entries[id as usize];
                    Candidate {
                        image: e.image,
                        keypoint: e.keypoint,
                        distance,
                    }
                })
                .collect(),
            k,
            excluded_image: exclude_image,
        })
    }

    /// Minimum positive squared distance from `query` to any entry outside `image`.
    pub fn min_external_distance(
        &self,
        query: &[f32],
        image: u32,
        scratch: &mut SearchScratch,
    ) -> Result<f64> {
        self.check_query(query)?;
        let entries = &self.entries;
        let accept = move |id: u32, d: f64| entries[id as usize].image != image && d > 0.0;
        self.search(query, 1, &accept, scratch)
            .first()
            .map(|(d, _)| *d)
            .ok_or(Error::NoExternalNeighbor)
    }

    /// Adaptive appearance bandwidth (kernel denominator) of keypoint
    /// `keypoint` of image `image`.
    pub fn adaptive_bandwidth(
        &self,
        image: usize,
        keypoint: usize,
        convention: AlphaConvention,
        scratch: &mut SearchScratch,
    ) -> Result<f64> {
        let id = self.entry_id(image, keypoint);
        let query = self.descriptor(id).to_vec();
        let d = self.min_external_distance(&query, image as u32, scratch)?;
        Ok(convention.denominator(d))
    }

    /// Plain scan over every entry; the reference the tree search must match.
    pub fn brute_force_knn(&self, query: &[f32], k: usize, exclude_image: Option<u32>) -> Vec<Candidate> {
        let mut all: Vec<(f64, u32)> = (0..self.entries.len())
            .filter(|&id| Some(self.entries[id].image) != exclude_image)
            .map(|id| (squared_distance(query, self.descriptor(id)), id as u32))
            .collect();
        all.sort_by(cmp_item);
        all.truncate(k);
        all.into_iter()
            .map(|(distance, id)| Candidate {
                image: self.entries[id as usize].image,
                keypoint: self.entries[id as usize].keypoint,
                distance,
            })
            .collect()
    }
}
