use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::KBest;

const LEAF_SIZE: usize = 10;
const SAMPLE_SIZE: usize = 100;
const TOP_DIMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Node {
    Leaf { start: u32, end: u32 },
    Split { dim: u32, value: f32, left: u32, right: u32 },
}

/// One kd-tree over a permutation of the shared descriptor array. Points in a
/// left subtree are `<= value` on the split dimension, right subtree `>= value`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct KdTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) perm: Vec<u32>,
}

#[inline]
fn coord(data: &[f32], dim: usize, id: u32, d: usize) -> f32 {
    data[id as usize * dim + d]
}

fn max_spread_dim(data: &[f32], dim: usize, ids: &[u32]) -> Option<usize> {
    let mut best: Option<(usize, f32)> = None;
    for d in 0..dim {
        let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
        for &id in ids {
            let v = coord(data, dim, id, d);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let spread = hi - lo;
        if spread > 0.0 && best.is_none_or(|(_, s)| spread > s) {
            best = Some((d, spread));
        }
    }
    best.map(|(d, _)| d)
}

/// Median split along `d`; both halves are nonempty for `ids.len() >= 2`.
fn median_split(data: &[f32], dim: usize, ids: &mut [u32], d: usize) -> (usize, f32) {
    let mid = ids.len() / 2;
    ids.select_nth_unstable_by(mid, |a, b| {
        coord(data, dim, *a, d)
            .total_cmp(&coord(data, dim, *b, d))
            .then(a.cmp(b))
    });
    (mid, coord(data, dim, ids[mid], d))
}

impl KdTree {
    fn empty(n: usize) -> Self {
        KdTree {
            nodes: Vec::new(),
            perm: (0..n as u32).collect(),
        }
    }

    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub(crate) fn build_exact(data: &[f32], dim: usize) -> Self {
        let n = data.len().checked_div(dim).unwrap_or(0);
        let mut tree = KdTree::empty(n);
        let mut perm = std::mem::take(&mut tree.perm);
        tree.exact_rec(data, dim, &mut perm, 0);
        tree.perm = perm;
        tree
    }

    fn exact_rec(&mut self, data: &[f32], dim: usize, ids: &mut [u32], offset: usize) -> usize {
        let leaf = Node::Leaf {
            start: offset as u32,
            end: (offset + ids.len()) as u32,
        };
        if ids.len() <= LEAF_SIZE {
            return self.push(leaf);
        }
        let Some(d) = max_spread_dim(data, dim, ids) else {
            return self.push(leaf);
        };
        let (mid, value) = median_split(data, dim, ids, d);
        let me = self.push(leaf);
        let (lo, hi) = ids.split_at_mut(mid);
        let left = self.exact_rec(data, dim, lo, offset) as u32;
        let right = self.exact_rec(data, dim, hi, offset + mid) as u32;
        self.nodes[me] = Node::Split {
            dim: d as u32,
            value,
            left,
            right,
        };
        me
    }

    pub(crate) fn build_randomized(data: &[f32], dim: usize, seed: u64) -> Self {
        let n = data.len().checked_div(dim).unwrap_or(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tree = KdTree::empty(n);
        let mut perm = std::mem::take(&mut tree.perm);
        tree.random_rec(data, dim, &mut perm, 0, &mut rng);
        tree.perm = perm;
        tree
    }

    fn random_rec(
        &mut self,
        data: &[f32],
        dim: usize,
        ids: &mut [u32],
        offset: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let leaf = Node::Leaf {
            start: offset as u32,
            end: (offset + ids.len()) as u32,
        };
        if ids.len() <= LEAF_SIZE {
            return self.push(leaf);
        }
        let split = random_split(data, dim, ids, rng).or_else(|| {
            let d = max_spread_dim(data, dim, ids)?;
            let (mid, value) = median_split(data, dim, ids, d);
            Some((d, mid, value))
        });
        let Some((d, mid, value)) = split else {
            return self.push(leaf);
        };
        let me = self.push(leaf);
        let (lo, hi) = ids.split_at_mut(mid);
        let left = self.random_rec(data, dim, lo, offset, rng) as u32;
        let right = self.random_rec(data, dim, hi, offset + mid, rng) as u32;
        self.nodes[me] = Node::Split {
            dim: d as u32,
            value,
            left,
            right,
        };
        me
    }

    /// Depth-first search with incremental cell-distance bounds; exact.
    pub(crate) fn search_exact(
        &self,
        data: &[f32],
        dim: usize,
        query: &[f32],
        accept: &dyn Fn(u32, f64) -> bool,
        best: &mut KBest<'_>,
        offsets: &mut [f64],
    ) {
        if self.nodes.is_empty() {
            return;
        }
        self.exact_search_rec(0, 0.0, data, dim, query, accept, best, offsets);
    }

    #[allow(clippy::too_many_arguments)]
    fn exact_search_rec(
        &self,
        node: usize,
        rd: f64,
        data: &[f32],
        dim: usize,
        query: &[f32],
        accept: &dyn Fn(u32, f64) -> bool,
        best: &mut KBest<'_>,
        offsets: &mut [f64],
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &id in &self.perm[start as usize..end as usize] {
                    check_point(data, dim, query, id, accept, best);
                }
            }
            Node::Split {
                dim: d,
                value,
                left,
                right,
            } => {
                let d = d as usize;
                let diff = query[d] as f64 - value as f64;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.exact_search_rec(near as usize, rd, data, dim, query, accept, best, offsets);
                let old = offsets[d];
                let far_rd = rd - old * old + diff * diff;
                if far_rd <= slack(best.worst()) {
                    offsets[d] = diff;
                    self.exact_search_rec(far as usize, far_rd, data, dim, query, accept, best, offsets);
                    offsets[d] = old;
                }
            }
        }
    }
}

/// Widens a pruning threshold by a relative hair so rounding in the
/// incremental bound can only cause extra visits, never missed ties.
#[inline]
fn slack(worst: f64) -> f64 {
    worst + worst * 1e-12
}

/// Picks one of the highest-variance dimensions (estimated on a prefix sample)
/// at random and splits at its sample mean.
fn random_split(
    data: &[f32],
    dim: usize,
    ids: &mut [u32],
    rng: &mut ChaCha8Rng,
) -> Option<(usize, usize, f32)> {
    let sample = &ids[..ids.len().min(SAMPLE_SIZE)];
    let m = sample.len() as f64;
    let mut stats: Vec<(f64, usize, f64)> = (0..dim)
        .map(|d| {
            let mean = sample.iter().map(|&id| coord(data, dim, id, d) as f64).sum::<f64>() / m;
            let var = sample
                .iter()
                .map(|&id| (coord(data, dim, id, d) as f64 - mean).powi(2))
                .sum::<f64>()
                / m;
            (var, d, mean)
        })
        .filter(|s| s.0 > 0.0)
        .collect();
    if stats.is_empty() {
        return None;
    }
    stats.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let (_, d, mean) = stats[rng.random_range(0..stats.len().min(TOP_DIMS))];
    let value = mean as f32;
    let mut lo = 0;
    for i in 0..ids.len() {
        if coord(data, dim, ids[i], d) < value {
            ids.swap(i, lo);
            lo += 1;
        }
    }
    if lo == 0 || lo == ids.len() {
        return None;
    }
    Some((d, lo, value))
}

#[inline]
fn check_point(
    data: &[f32],
    dim: usize,
    query: &[f32],
    id: u32,
    accept: &dyn Fn(u32, f64) -> bool,
    best: &mut KBest<'_>,
) {
    let worst = best.worst();
    let p = &data[id as usize * dim..(id as usize + 1) * dim];
    let mut sum = 0.0f64;
    for (chunk_q, chunk_p) in query.chunks(8).zip(p.chunks(8)) {
        for (x, y) in chunk_q.iter().zip(chunk_p) {
            let d = *x as f64 - *y as f64;
            sum += d * d;
        }
        if sum > worst {
            return;
        }
    }
    if accept(id, sum) {
        best.offer(sum, id);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Branch {
    bound: f64,
    tree: u32,
    node: u32,
}

impl Eq for Branch {}

impl Ord for Branch {
    // min-heap on bound, then lowest tree and node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.tree.cmp(&self.tree))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Branch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best-bin-first search over a forest. Stops once `budget` points have been
/// checked and the result set is full, or when no branch can improve it.
#[allow(clippy::too_many_arguments)]
pub(crate) fn search_forest(
    trees: &[KdTree],
    data: &[f32],
    dim: usize,
    query: &[f32],
    accept: &dyn Fn(u32, f64) -> bool,
    best: &mut KBest<'_>,
    budget: usize,
    stamps: &mut [u32],
    epoch: u32,
    branches: &mut BinaryHeap<Branch>,
) {
    branches.clear();
    let mut checks = 0usize;
    let mut ctx = ForestCtx {
        trees,
        data,
        dim,
        query,
        accept,
        stamps,
        epoch,
    };
    for t in 0..trees.len() {
        if !trees[t].nodes.is_empty() {
            checks += ctx.descend(t, 0, 0.0, branches, best);
        }
    }
    while let Some(b) = branches.pop() {
        if best.full() && b.bound > slack(best.worst()) {
            break;
        }
        checks += ctx.descend(b.tree as usize, b.node as usize, b.bound, branches, best);
        if best.full() && checks >= budget {
            break;
        }
    }
}

struct ForestCtx<'a> {
    trees: &'a [KdTree],
    data: &'a [f32],
    dim: usize,
    query: &'a [f32],
    accept: &'a dyn Fn(u32, f64) -> bool,
    stamps: &'a mut [u32],
    epoch: u32,
}

impl ForestCtx<'_> {
    /// Walks to the nearest leaf, queueing far branches; returns points checked.
    fn descend(
        &mut self,
        tree_idx: usize,
        mut node: usize,
        bound: f64,
        branches: &mut BinaryHeap<Branch>,
        best: &mut KBest<'_>,
    ) -> usize {
        let tree = &self.trees[tree_idx];
        loop {
            match tree.nodes[node] {
                Node::Split {
                    dim: d,
                    value,
                    left,
                    right,
                } => {
                    let diff = self.query[d as usize] as f64 - value as f64;
                    let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                    let far_bound = bound.max(diff * diff);
                    if far_bound <= slack(best.worst()) {
                        branches.push(Branch {
                            bound: far_bound,
                            tree: tree_idx as u32,
                            node: far,
                        });
                    }
                    node = near as usize;
                }
                Node::Leaf { start, end } => {
                    let mut checked = 0;
                    for &id in &tree.perm[start as usize..end as usize] {
                        let stamp = &mut self.stamps[id as usize];
                        if *stamp == self.epoch {
                            continue;
                        }
                        *stamp = self.epoch;
                        checked += 1;
                        check_point(self.data, self.dim, self.query, id, self.accept, best);
                    }
                    return checked;
                }
            }
        }
    }
}
