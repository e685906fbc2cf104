//! Soft-equivalence kernels between two keypoints.
//!
//! Every kernel is a squared exponential with values in `[0, 1]`, equal to 1
//! exactly when its arguments coincide.

use crate::error::{Error, Result};
use crate::model::{Keypoint, KernelMode};

/// A kernel evaluation in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct KernelValue(f64);

impl KernelValue {
    pub const ONE: KernelValue = KernelValue(1.0);

    pub(crate) fn new(value: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&value), "kernel value {value} out of range");
        KernelValue(value)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<KernelValue> for f64 {
    fn from(v: KernelValue) -> f64 {
        v.0
    }
}

/// Sequential squared Euclidean distance, accumulated in f64.
#[inline]
pub fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = *x as f64 - *y as f64;
        sum += d * d;
    }
    sum
}

#[inline]
fn squared_distance_3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

fn check_scale(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveScale(s))
    }
}

/// `exp(-d / denominator)` for an already computed squared descriptor distance.
#[inline]
pub(crate) fn appearance_from_distance(squared_distance: f64, denominator: f64) -> f64 {
    if squared_distance == 0.0 {
        1.0
    } else {
        (-squared_distance / denominator).exp()
    }
}

/// Appearance kernel over descriptors with bandwidth denominator `alpha_sq`.
pub fn appearance_kernel(a: &[f32], b: &[f32], alpha_sq: f64) -> Result<KernelValue> {
    if !(alpha_sq > 0.0) {
        return Err(Error::NonPositiveBandwidth(alpha_sq));
    }
    if a.len() != b.len() {
        return Err(Error::DimMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(KernelValue::new(appearance_from_distance(
        squared_distance(a, b),
        alpha_sq,
    )))
}

#[inline]
pub(crate) fn location_unchecked(
    xi: &[f64; 3],
    xj: &[f64; 3],
    si: f64,
    sj: f64,
    bandwidth: f64,
) -> f64 {
    let d = squared_distance_3(xi, xj);
    if d == 0.0 {
        1.0
    } else {
        (-d / (bandwidth * si * sj)).exp()
    }
}

#[inline]
pub(crate) fn scale_unchecked(si: f64, sj: f64, bandwidth: f64) -> f64 {
    if si == sj {
        return 1.0;
    }
    let l = si.ln() - sj.ln();
    (-(l * l) / bandwidth).exp()
}

/// Location kernel: squared displacement normalized by the product of scales.
pub fn location_kernel(xi: &[f64; 3], xj: &[f64; 3], si: f64, sj: f64) -> Result<KernelValue> {
    check_scale(si)?;
    check_scale(sj)?;
    Ok(KernelValue::new(location_unchecked(xi, xj, si, sj, 1.0)))
}

/// Scale kernel: penalizes the squared log ratio of two scales.
pub fn scale_kernel(si: f64, sj: f64) -> Result<KernelValue> {
    check_scale(si)?;
    check_scale(sj)?;
    Ok(KernelValue::new(scale_unchecked(si, sj, 1.0)))
}

/// Geometry factor (location times scale) with an optional shared bandwidth multiplier.
#[inline]
pub(crate) fn geometry_unchecked(fi: &Keypoint, fj: &Keypoint, bandwidth: f64) -> f64 {
    location_unchecked(&fi.location, &fj.location, fi.scale, fj.scale, bandwidth)
        * scale_unchecked(fi.scale, fj.scale, bandwidth)
}

/// Factored kernel between two keypoints.
///
/// In `Hse` mode the pair is assumed to be a kNN candidate, which is a hard
/// match by definition, so the value is 1.
pub fn composite_kernel(
    fi: &Keypoint,
    fj: &Keypoint,
    alpha_sq: f64,
    mode: KernelMode,
) -> Result<KernelValue> {
    check_scale(fi.scale)?;
    check_scale(fj.scale)?;
    let app = appearance_kernel(&fi.descriptor, &fj.descriptor, alpha_sq)?.get();
    Ok(match mode {
        KernelMode::Hse => KernelValue::ONE,
        KernelMode::SseApp => KernelValue::new(app),
        KernelMode::SseAppGeo => KernelValue::new(app * geometry_unchecked(fi, fj, 1.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{E, LN_2};

    const EXP_M1: f64 = 0.36787944117144233;

    #[test]
    fn appearance_values() {
        let a = [1.0f32, 2.0, 3.0];
        assert_eq!(appearance_kernel(&a, &a, 4.0).unwrap().get(), 1.0);
        // squared distance 4 at bandwidth 4
        let b = [1.0f32, 2.0, 5.0];
        assert!((appearance_kernel(&a, &b, 4.0).unwrap().get() - EXP_M1).abs() < 1e-12);
        // squared distance 2 at bandwidth 4
        let c = [2.0f32, 3.0, 3.0];
        let v = appearance_kernel(&a, &c, 4.0).unwrap().get();
        assert!((v - 0.6065306597126334).abs() < 1e-12);
        assert!(matches!(
            appearance_kernel(&a, &c, 0.0),
            Err(Error::NonPositiveBandwidth(_))
        ));
    }

    #[test]
    fn location_values() {
        let o = [0.0, 0.0, 0.0];
        assert_eq!(location_kernel(&o, &o, 3.0, 5.0).unwrap().get(), 1.0);
        let v = location_kernel(&o, &[2.0, 0.0, 0.0], 2.0, 2.0).unwrap().get();
        assert!((v - EXP_M1).abs() < 1e-12);
        assert!(location_kernel(&o, &o, -1.0, 1.0).is_err());
    }

    #[test]
    fn scale_values() {
        assert_eq!(scale_kernel(3.0, 3.0).unwrap().get(), 1.0);
        assert!((scale_kernel(1.5, 1.5 * E).unwrap().get() - EXP_M1).abs() < 1e-12);
        let v = scale_kernel(2.0, 4.0).unwrap().get();
        assert!((v - (-LN_2 * LN_2).exp()).abs() < 1e-15);
        assert!((v - 0.618503).abs() < 1e-6);
        assert!(matches!(scale_kernel(0.0, 1.0), Err(Error::NonPositiveScale(_))));
    }

    #[test]
    fn composite_product_and_modes() {
        // appearance 0.5: squared distance ln(2) * alpha_sq
        let alpha_sq = 2.0;
        let target = LN_2 * alpha_sq;
        let fi = Keypoint::new([0.0, 0.0, 0.0], 2.0, vec![0.0, 0.0]);
        let fj = Keypoint::new([2.0, 0.0, 0.0], 2.0, vec![target.sqrt() as f32, 0.0]);
        let app = appearance_kernel(&fi.descriptor, &fj.descriptor, alpha_sq).unwrap().get();
        let v = composite_kernel(&fi, &fj, alpha_sq, KernelMode::SseAppGeo).unwrap().get();
        assert!((v - app * EXP_M1).abs() < 1e-15);
        assert!((app - 0.5).abs() < 1e-6);
        assert!((v - 0.183940).abs() < 1e-6);

        assert_eq!(composite_kernel(&fi, &fi, 1.0, KernelMode::SseAppGeo).unwrap().get(), 1.0);
        let mut moved = fj.clone();
        moved.location = [40.0, -3.0, 7.0];
        moved.scale = 9.0;
        assert_eq!(
            composite_kernel(&fi, &fj, alpha_sq, KernelMode::SseApp).unwrap(),
            composite_kernel(&fi, &moved, alpha_sq, KernelMode::SseApp).unwrap()
        );
        assert_eq!(composite_kernel(&fi, &moved, 1.0, KernelMode::Hse).unwrap().get(), 1.0);
    }

    proptest! {
        #[test]
        fn kernels_bounded_and_decreasing(d1 in 0.0f64..50.0, extra in 1e-3f64..50.0, s in 0.1f64..20.0) {
            let o = [0.0, 0.0, 0.0];
            let near = location_kernel(&o, &[d1.sqrt(), 0.0, 0.0], s, s).unwrap().get();
            let far = location_kernel(&o, &[(d1 + extra).sqrt(), 0.0, 0.0], s, s).unwrap().get();
            prop_assert!((0.0..=1.0).contains(&near));
            prop_assert!(far < near || far == 0.0);
            let a1 = appearance_from_distance(d1, s);
            let a2 = appearance_from_distance(d1 + extra, s);
            prop_assert!(a2 < a1 || a2 == 0.0);
        }

        #[test]
        fn scale_kernel_symmetric_and_ratio_invariant(si in 0.05f64..50.0, sj in 0.05f64..50.0, c in 0.01f64..100.0) {
            let v = scale_kernel(si, sj).unwrap().get();
            prop_assert_eq!(v, scale_kernel(sj, si).unwrap().get());
            prop_assert!((scale_kernel(c * si, c * sj).unwrap().get() - v).abs() < 1e-12);
        }

        #[test]
        fn location_kernel_similarity_consistent(
            x in prop::array::uniform3(-100.0f64..100.0),
            y in prop::array::uniform3(-100.0f64..100.0),
            si in 0.5f64..16.0, sj in 0.5f64..16.0, s in 0.1f64..10.0,
        ) {
            let v = location_kernel(&x, &y, si, sj).unwrap().get();
            let xs = x.map(|c| c * s);
            let ys = y.map(|c| c * s);
            let w = location_kernel(&xs, &ys, s * si, s * sj).unwrap().get();
            prop_assert!((v - w).abs() < 1e-12);
        }
    }
}
