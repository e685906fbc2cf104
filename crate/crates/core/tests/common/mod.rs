//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softjaccard::model::{Keypoint, KeypointSet, KernelMode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small random cohort: some images are noisy copies of earlier ones so that
/// kernel values span the whole range; at most one image is empty.
pub fn random_cohort(rng: &mut ChaCha8Rng, n: usize, max_keypoints: usize, dim: usize) -> Vec<KeypointSet> {
    let mut sets: Vec<KeypointSet> = Vec::with_capacity(n);
    let empty = if rng.random_bool(0.3) { Some(rng.random_range(0..n)) } else { None };
    for i in 0..n {
        let id = format!("I{i:02}");
        if Some(i) == empty {
            sets.push(KeypointSet::new(id, dim, Vec::new()).unwrap());
            continue;
        }
        let m = rng.random_range(1..=max_keypoints);
        let parent = if i > 0 && rng.random_bool(0.5) {
            let p = rng.random_range(0..i);
            (!sets[p].is_empty()).then_some(p)
        } else {
            None
        };
        let kps = (0..m)
            .map(|j| match parent {
                Some(p) if j < sets[p].len() && rng.random_bool(0.7) => {
                    let src = &sets[p].keypoints[j];
                    Keypoint::new(
                        src.location.map(|x| x + rng.random_range(-2.0..2.0)),
                        src.scale * rng.random_range(0.8..1.25),
                        src.descriptor.iter().map(|v| v + rng.random_range(-0.2f32..0.2)).collect(),
                    )
                }
                _ => Keypoint::new(
                    [rng.random_range(0.0..20.0), rng.random_range(0.0..20.0), rng.random_range(0.0..20.0)],
                    rng.random_range(1.0..6.0),
                    (0..dim).map(|_| rng.random_range(0.0f32..1.0)).collect(),
                ),
            })
            .collect();
        sets.push(KeypointSet::new(id, dim, kps).unwrap());
    }
    sets
}

fn sq(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum()
}

/// Kernel between keypoint `fi` of image `a` and `fj`, with `fi`'s bandwidth.
fn kernel(fi: &Keypoint, fj: &Keypoint, alpha_sq: f64, mode: KernelMode) -> f64 {
    let d = sq(&fi.descriptor, &fj.descriptor);
    let app = if d == 0.0 { 1.0 } else { (-d / alpha_sq).exp() };
    match mode {
        KernelMode::Hse => 1.0,
        KernelMode::SseApp => app,
        KernelMode::SseAppGeo => {
            let dx: f64 = (0..3).map(|k| (fi.location[k] - fj.location[k]).powi(2)).sum();
            let loc = (-dx / (fi.scale * fj.scale)).exp();
            let l = (fi.scale / fj.scale).ln();
            app * loc * (-l * l).exp()
        }
    }
}

/// `-ln J` for every pair from a double loop over all keypoint pairs.
pub fn oracle_distances(cohort: &[KeypointSet], mode: KernelMode) -> Vec<Vec<f64>> {
    let n = cohort.len();
    // bandwidth of each keypoint: smallest positive squared distance to any other image
    let alpha: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            cohort[a]
                .keypoints
                .iter()
                .map(|fi| {
                    let mut best = f64::INFINITY;
                    for (b, set) in cohort.iter().enumerate() {
                        if b == a {
                            continue;
                        }
                        for fj in &set.keypoints {
                            let d = sq(&fi.descriptor, &fj.descriptor);
                            if d > 0.0 && d < best {
                                best = d;
                            }
                        }
                    }
                    best
                })
                .collect()
        })
        .collect();
    let mu = |a: usize, b: usize| -> f64 {
        cohort[a]
            .keypoints
            .iter()
            .enumerate()
            .map(|(i, fi)| {
                cohort[b]
                    .keypoints
                    .iter()
                    .map(|fj| kernel(fi, fj, alpha[a][i], mode))
                    .fold(0.0, f64::max)
            })
            .sum()
    };
    let mut out = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let inter = mu(a, b).min(mu(b, a));
            let j = inter / (cohort[a].len() as f64 + cohort[b].len() as f64 - inter);
            out[a][b] = if j == 0.0 { f64::INFINITY } else { -j.ln() };
        }
    }
    out
}

/// `sup_t |F_x(t) - F_y(t)|` over every sample point.
pub fn ecdf_sup(x: &[f64], y: &[f64]) -> f64 {
    let cdf = |s: &[f64], t: f64| s.iter().filter(|v| **v <= t).count() as f64 / s.len() as f64;
    x.iter().chain(y).map(|&t| (cdf(x, t) - cdf(y, t)).abs()).fold(0.0, f64::max)
}

/// Probability that a positive distance is below a negative one, ties counted half.
pub fn mann_whitney(pos: &[f64], neg: &[f64]) -> f64 {
    let mut wins = 0.0;
    for p in pos {
        for q in neg {
            if p < q {
                wins += 1.0;
            } else if p == q {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}
