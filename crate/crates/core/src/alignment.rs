//! Feature-based similarity alignment of keypoint sets.
//!
//! Correspondences come from descriptor nearest neighbors with a ratio gate;
//! the transform is a robust consensus over minimal three-match absolute
//! orientation solves, refit on the winning inlier set.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::index::{DescriptorIndex, IndexMode};
use crate::model::KeypointSet;

/// `x' = s R x + t`, `sigma' = s sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Checks `s > 0`, `det R = +1` and `|R^T R - I|_inf <= 1e-9`.
    pub fn new(scale: f64, rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let t = SimilarityTransform {
            scale,
            rotation,
            translation,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidConfig(format!("transform scale {} is not positive", self.scale)));
        }
        let ortho = (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax();
        if !(ortho <= 1e-9) || self.rotation.determinant() <= 0.0 {
            return Err(Error::InvalidConfig("transform rotation is not a proper rotation".into()));
        }
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("transform translation is not finite".into()));
        }
        Ok(())
    }

    /// Rotation by `angle` radians about the unit `axis`.
    pub fn rotation_about(axis: [f64; 3], angle: f64) -> Matrix3<f64> {
        let axis = nalgebra::Unit::new_normalize(Vector3::from(axis));
        *nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix()
    }

    pub fn apply_point(&self, x: &[f64; 3]) -> [f64; 3] {
        let y = self.scale * (self.rotation * Vector3::from(*x)) + self.translation;
        [y[0], y[1], y[2]]
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        SimilarityTransform {
            scale: 1.0 / self.scale,
            rotation: rt,
            translation: -(rt * self.translation) / self.scale,
        }
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &SimilarityTransform) -> Self {
        SimilarityTransform {
            scale: self.scale * first.scale,
            rotation: self.rotation * first.rotation,
            translation: self.scale * (self.rotation * first.translation) + self.translation,
        }
    }

    /// Angle of the relative rotation `self^T other` in degrees.
    pub fn rotation_angle_to(&self, other: &SimilarityTransform) -> f64 {
        let r = self.rotation.transpose() * other.rotation;
        ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
    }

    /// `s r11 r12 r13 r21 ... r33 tx ty tz` on one line.
    pub fn render(&self) -> String {
        let mut values = vec![self.scale];
        for i in 0..3 {
            for j in 0..3 {
                values.push(self.rotation[(i, j)]);
            }
        }
        values.extend(self.translation.iter());
        let tokens: Vec<String> = values.iter().map(f64::to_string).collect();
        tokens.join(" ") + "\n"
    }

    pub fn parse(text: &str) -> Result<Self> {
        let values = text
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::parse(1, format!("invalid number {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 13 {
            return Err(Error::parse(1, format!("expected 13 values, found {}", values.len())));
        }
        SimilarityTransform::new(
            values[0],
            Matrix3::from_row_slice(&values[1..10]),
            Vector3::new(values[10], values[11], values[12]),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        SimilarityTransform::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Transforms locations and scales; descriptors are untouched.
pub fn apply_transform(set: &KeypointSet, t: &SimilarityTransform) -> KeypointSet {
    let mut out = set.clone();
    for kp in &mut out.keypoints {
        kp.location = t.apply_point(&kp.location);
        kp.scale *= t.scale;
    }
    out
}

/// A descriptor correspondence from `src` to `dst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub src: usize,
    pub dst: usize,
    /// Squared descriptor distance.
    pub distance: f64,
}

/// Nearest `dst` keypoint for every `src` keypoint, kept when the Euclidean
/// nearest/second-nearest ratio is at most `ratio_gate`. A match with no
/// second neighbor always passes; two equally near neighbors never pass a gate below 1.
pub fn match_pairs(src: &KeypointSet, dst: &KeypointSet, k: usize, ratio_gate: f64) -> Result<Vec<Match>> {
    if src.descriptor_dim != dst.descriptor_dim {
        return Err(Error::DimMismatch {
            expected: src.descriptor_dim,
            found: dst.descriptor_dim,
        });
    }
    if dst.is_empty() || src.is_empty() {
        return Ok(Vec::new());
    }
    let index = DescriptorIndex::build(std::slice::from_ref(dst), IndexMode::Exact)?;
    let mut scratch = index.scratch();
    let mut out = Vec::new();
    for (i, kp) in src.keypoints.iter().enumerate() {
        let list = index.query_knn(&kp.descriptor, k.max(2), None, &mut scratch)?;
        let best = list.candidates[0];
        let pass = match list.candidates.get(1) {
            None => true,
            Some(second) if second.distance == 0.0 => ratio_gate >= 1.0,
            Some(second) => (best.distance / second.distance).sqrt() <= ratio_gate,
        };
        if pass {
            out.push(Match {
                src: i,
                dst: best.keypoint as usize,
                distance: best.distance,
            });
        }
    }
    Ok(out)
}

/// Robust estimation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub trials: usize,
    /// Inlier when the residual is at most this multiple of the geometric
    /// mean of the two keypoint scales (source scale taken after transform).
    pub inlier_tol: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            trials: 1000,
            inlier_tol: 1.0,
            seed: 0,
        }
    }
}

/// Estimated transform with its consensus set.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub transform: SimilarityTransform,
    pub inliers: Vec<usize>,
    /// RMS location residual of the refit over the inliers (mm).
    pub rms: f64,
}

/// Least-squares similarity mapping `src[i]` onto `dst[i]` (closed form).
pub fn absolute_orientation(src: &[[f64; 3]], dst: &[[f64; 3]]) -> Result<SimilarityTransform> {
    let n = src.len();
    if n < 3 || dst.len() != n {
        return Err(Error::DegenerateGeometry("need at least 3 point pairs"));
    }
    let to_v = |p: &[f64; 3]| Vector3::from(*p);
    let mu_x = src.iter().map(to_v).sum::<Vector3<f64>>() / n as f64;
    let mu_y = dst.iter().map(to_v).sum::<Vector3<f64>>() / n as f64;
    let mut cov = Matrix3::zeros();
    let mut cov_x = Matrix3::zeros();
    let mut var_x = 0.0;
    for (x, y) in src.iter().zip(dst) {
        let dx = to_v(x) - mu_x;
        let dy = to_v(y) - mu_y;
        cov += dy * dx.transpose();
        cov_x += dx * dx.transpose();
        var_x += dx.norm_squared();
    }
    cov /= n as f64;
    var_x /= n as f64;
    let spread = cov_x.symmetric_eigenvalues();
    let mut ev: Vec<f64> = spread.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if !(ev[0] > 0.0) || ev[1] <= 1e-12 * ev[0] {
        return Err(Error::DegenerateGeometry("points are collinear"));
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut s = Matrix3::identity();
    if u.determinant() * v_t.determinant() < 0.0 {
        s[(2, 2)] = -1.0;
    }
    let rotation = u * s * v_t;
    let d = svd.singular_values;
    let scale = (d[0] * s[(0, 0)] + d[1] * s[(1, 1)] + d[2] * s[(2, 2)]) / var_x;
    if !(scale > 0.0) {
        return Err(Error::DegenerateGeometry("non-positive scale"));
    }
    let translation = mu_y - scale * (rotation * mu_x);
    Ok(SimilarityTransform {
        scale,
        rotation,
        translation,
    })
}

struct Pairs {
    src: Vec<[f64; 3]>,
    dst: Vec<[f64; 3]>,
    src_scale: Vec<f64>,
    dst_scale: Vec<f64>,
}

impl Pairs {
    fn residual_sq(&self, t: &SimilarityTransform, i: usize) -> f64 {
        let y = t.apply_point(&self.src[i]);
        (0..3).map(|d| (y[d] - self.dst[i][d]).powi(2)).sum()
    }

    fn inliers(&self, t: &SimilarityTransform, tol: f64) -> Vec<usize> {
        (0..self.src.len())
            .filter(|&i| {
                let limit = tol * (t.scale * self.src_scale[i] * self.dst_scale[i]).sqrt();
                self.residual_sq(t, i) <= limit * limit
            })
            .collect()
    }

    fn refit(&self, idx: &[usize]) -> Result<(SimilarityTransform, f64)> {
        let src: Vec<_> = idx.iter().map(|&i| self.src[i]).collect();
        let dst: Vec<_> = idx.iter().map(|&i| self.dst[i]).collect();
        let t = absolute_orientation(&src, &dst)?;
        let rms = (idx.iter().map(|&i| self.residual_sq(&t, i)).sum::<f64>() / idx.len() as f64).sqrt();
        Ok((t, rms))
    }
}

/// Consensus similarity from matched keypoints of `src` and `dst`.
pub fn estimate_similarity_transform(
    matches: &[Match],
    src: &KeypointSet,
    dst: &KeypointSet,
    config: &RansacConfig,
) -> Result<Estimate> {
    if matches.len() < 3 {
        return Err(Error::DegenerateGeometry("fewer than 3 matches"));
    }
    let pairs = Pairs {
        src: matches.iter().map(|m| src.keypoints[m.src].location).collect(),
        dst: matches.iter().map(|m| dst.keypoints[m.dst].location).collect(),
        src_scale: matches.iter().map(|m| src.keypoints[m.src].scale).collect(),
        dst_scale: matches.iter().map(|m| dst.keypoints[m.dst].scale).collect(),
    };
    // fails with DegenerateGeometry when every location is collinear
    absolute_orientation(&pairs.src, &pairs.dst)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(usize, f64, Vec<usize>, SimilarityTransform)> = None;
    for _ in 0..config.trials {
        let pick = sample(&mut rng, pairs.src.len(), 3);
        let idx: Vec<usize> = pick.iter().collect();
        let Ok((t, _)) = pairs.refit(&idx) else { continue };
        let inliers = pairs.inliers(&t, config.inlier_tol);
        if inliers.len() < 3 {
            continue;
        }
        let Ok((refit, rms)) = pairs.refit(&inliers) else { continue };
        let better = match &best {
            None => true,
            Some((count, best_rms, _, _)) => inliers.len() > *count || (inliers.len() == *count && rms < *best_rms),
        };
        if better {
            best = Some((inliers.len(), rms, inliers, refit));
        }
    }
    let (count, rms, inliers, transform) = best.ok_or(Error::NoConsensus(0))?;
    if count < 3 {
        return Err(Error::NoConsensus(count));
    }
    Ok(Estimate {
        transform,
        inliers,
        rms,
    })
}

/// Matches `src` to an atlas and estimates the transform onto it.
pub fn align_to_atlas(
    src: &KeypointSet,
    atlas: &KeypointSet,
    ratio_gate: f64,
    config: &RansacConfig,
) -> Result<Estimate> {
    let matches = match_pairs(src, atlas, 2, ratio_gate)?;
    estimate_similarity_transform(&matches, src, atlas, config)
}
