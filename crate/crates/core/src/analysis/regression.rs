//! Location error against keypoint scale for corresponding keypoints.

use serde::Serialize;

use crate::alignment::match_pairs;
use crate::error::{Error, Result};
use crate::model::KeypointSet;

/// `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

/// Observed location error `|x_i - x_j|` at geometric mean scale `sqrt(s_i s_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSample {
    pub scale: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleErrorFit {
    /// Error against scale.
    pub raw: LinearFit,
    /// Error divided by scale against scale.
    pub normalized: LinearFit,
}

pub fn least_squares(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::DegenerateFit("x and y lengths differ"));
    }
    if n < 2 || x.iter().all(|v| *v == x[0]) {
        return Err(Error::DegenerateFit("need at least 2 distinct abscissae"));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        n,
    })
}

pub fn scale_error_regression(samples: &[ErrorSample]) -> Result<ScaleErrorFit> {
    let x: Vec<f64> = samples.iter().map(|s| s.scale).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.error).collect();
    let yn: Vec<f64> = samples.iter().map(|s| s.error / s.scale).collect();
    Ok(ScaleErrorFit {
        raw: least_squares(&x, &y)?,
        normalized: least_squares(&x, &yn)?,
    })
}

/// Error samples from ratio-gated descriptor matches between two aligned sets.
pub fn correspondence_errors(src: &KeypointSet, dst: &KeypointSet, ratio_gate: f64) -> Result<Vec<ErrorSample>> {
    Ok(match_pairs(src, dst, 2, ratio_gate)?
        .into_iter()
        .map(|m| {
            let (a, b) = (&src.keypoints[m.src], &dst.keypoints[m.dst]);
            let error = (0..3).map(|d| (a.location[d] - b.location[d]).powi(2)).sum::<f64>().sqrt();
            ErrorSample {
                scale: (a.scale * b.scale).sqrt(),
                error,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fits() {
        let prop: Vec<_> = (1..20).map(|i| ErrorSample { scale: i as f64, error: 0.4 * i as f64 }).collect();
        let f = scale_error_regression(&prop).unwrap();
        assert!((f.raw.slope - 0.4).abs() < 1e-12);
        assert!(f.normalized.slope.abs() < 1e-12);
        let constant: Vec<_> = (1..20).map(|i| ErrorSample { scale: i as f64, error: 2.0 }).collect();
        assert!(scale_error_regression(&constant).unwrap().raw.slope.abs() < 1e-12);
        let same: Vec<_> = (0..5).map(|_| ErrorSample { scale: 1.0, error: 2.0 }).collect();
        assert!(matches!(scale_error_regression(&same), Err(Error::DegenerateFit(_))));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noisy: Vec<_> = (0..500)
            .map(|_| {
                let s: f64 = rng.random_range(1.0..16.0);
                ErrorSample { scale: s, error: 0.3 * s + rng.random_range(-0.5..0.5) }
            })
            .collect();
        assert!((scale_error_regression(&noisy).unwrap().raw.slope - 0.3).abs() < 0.05);
    }
}
