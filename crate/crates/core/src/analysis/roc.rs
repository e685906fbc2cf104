//! ROC curves for distance-based discrimination.
//!
//! A pair is predicted positive when its distance is at most the threshold,
//! so the score is `-distance` and `+inf` ranks as farthest.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    /// Distance thresholds, ascending; the first is `-inf` (nothing positive).
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    /// Trapezoidal area under the curve.
    pub auc: f64,
}

impl RocCurve {
    pub fn write_csv(&self, out: impl std::io::Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["threshold", "fpr", "tpr"])?;
        for i in 0..self.thresholds.len() {
            let t = self.thresholds[i];
            let t = if t == f64::NEG_INFINITY { "-inf".to_string() } else { crate::io::format_distance(t) };
            w.write_record([t, self.fpr[i].to_string(), self.tpr[i].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check(pos: &[f64], neg: &[f64]) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::OneClassMissing);
    }
    if pos.iter().chain(neg).any(|v| v.is_nan()) {
        return Err(Error::InvalidConfig("NaN in ROC input".into()));
    }
    Ok(())
}

/// Threshold sweep over the pooled distinct distances.
pub fn roc_auc(positive: &[f64], negative: &[f64]) -> Result<RocCurve> {
    check(positive, negative)?;
    let mut pos = positive.to_vec();
    let mut neg = negative.to_vec();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut curve = RocCurve {
        thresholds: vec![f64::NEG_INFINITY],
        tpr: vec![0.0],
        fpr: vec![0.0],
        auc: 0.0,
    };
    let (mut i, mut j) = (0, 0);
    let mut area = 0.0;
    while i < pos.len() || j < neg.len() {
        let t = match (pos.get(i), neg.get(j)) {
            (Some(a), Some(b)) => a.min(*b),
            (Some(a), None) => *a,
            (None, Some(b)) => *b,
            (None, None) => unreachable!(),
        };
        let (i0, j0) = (i, j);
        while i < pos.len() && pos[i] == t {
            i += 1;
        }
        while j < neg.len() && neg[j] == t {
            j += 1;
        }
        // trapezoid in count units: (j - j0) * (i0 + i) / 2
        area += (j - j0) as f64 * (i0 + i) as f64 / 2.0;
        curve.thresholds.push(t);
        curve.tpr.push(i as f64 / np);
        curve.fpr.push(j as f64 / nn);
    }
    curve.auc = area / (np * nn);
    Ok(curve)
}

/// ROC over scores where higher means more likely positive.
pub fn roc_from_scores(positive: &[f64], negative: &[f64]) -> Result<RocCurve> {
    let flip = |v: &[f64]| v.iter().map(|s| -s).collect::<Vec<_>>();
    roc_auc(&flip(positive), &flip(negative))
}

/// Mann-Whitney AUC of distances by explicit pair counting (ties count one half).
pub fn auc_pair_counting(positive: &[f64], negative: &[f64]) -> Result<f64> {
    check(positive, negative)?;
    let mut wins = 0u64;
    let mut ties = 0u64;
    for p in positive {
        for n in negative {
            if p < n {
                wins += 1;
            } else if p == n {
                ties += 1;
            }
        }
    }
    Ok((wins as f64 + ties as f64 / 2.0) / (positive.len() as f64 * negative.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(roc_auc(&[0.1, 0.2], &[0.5, 0.9]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[0.3, 0.7], &[0.3, 0.7]).unwrap().auc, 0.5);
        // positive scores {0.9, 0.4}, negative {0.5}
        let r = roc_from_scores(&[0.9, 0.4], &[0.5]).unwrap();
        assert_eq!(r.auc, 0.5);
        assert!(matches!(roc_auc(&[], &[1.0]), Err(Error::OneClassMissing)));
        let inf = roc_auc(&[1.0, f64::INFINITY], &[f64::INFINITY]).unwrap();
        assert_eq!(inf.auc, 0.75);
        assert_eq!(*inf.tpr.last().unwrap(), 1.0);
        assert_eq!(*inf.fpr.last().unwrap(), 1.0);
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        roc_auc(&[1.0], &[f64::INFINITY]).unwrap().write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "threshold,fpr,tpr\n-inf,0,0\n1,0,1\ninf,1,1\n");
    }

    proptest! {
        #[test]
        fn sweep_matches_pair_counting(
            pos in prop::collection::vec(prop_oneof![9 => (0u8..30).prop_map(f64::from), 1 => Just(f64::INFINITY)], 1..100),
            neg in prop::collection::vec(prop_oneof![9 => (0u8..30).prop_map(f64::from), 1 => Just(f64::INFINITY)], 1..100),
        ) {
            let r = roc_auc(&pos, &neg).unwrap();
            prop_assert!((r.auc - auc_pair_counting(&pos, &neg).unwrap()).abs() <= 1e-9);
            prop_assert!(r.tpr.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(r.fpr.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
