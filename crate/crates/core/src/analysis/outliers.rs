//! Per-label outlier flags around the median.

use serde::Serialize;

use super::pedigree::LabeledPair;
use super::stats::{quantile, summarize};
use crate::model::PairLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    High,
    Low,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierFlag {
    /// Index into the input pairs.
    pub pair: usize,
    pub label: PairLabel,
    pub direction: Direction,
    /// `(d - median) / (IQR / 1.349)`, the normal-equivalent z-score.
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierRule {
    /// Flag values beyond `median +- iqr_multiple * IQR`.
    pub iqr_multiple: f64,
    /// Labels with fewer finite distances are not examined.
    pub min_samples: usize,
}

impl Default for OutlierRule {
    fn default() -> Self {
        OutlierRule {
            iqr_multiple: 3.0,
            min_samples: 5,
        }
    }
}

/// Flags sorted by label, then by distance (lowest first).
pub fn flag_outliers(pairs: &[LabeledPair], rule: &OutlierRule) -> Vec<OutlierFlag> {
    let mut flags = Vec::new();
    for label in PairLabel::ALL {
        let members: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].label == label).collect();
        let values: Vec<f64> = members.iter().map(|&i| pairs[i].distance).collect();
        let s = summarize(&values);
        if s.count < rule.min_samples {
            continue;
        }
        let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        finite.sort_by(f64::total_cmp);
        let iqr = quantile(&finite, 0.75) - quantile(&finite, 0.25);
        let (lo, hi) = (s.median - rule.iqr_multiple * iqr, s.median + rule.iqr_multiple * iqr);
        let mut found: Vec<OutlierFlag> = members
            .iter()
            .filter_map(|&i| {
                let d = pairs[i].distance;
                let direction = if d > hi {
                    Direction::High
                } else if d < lo {
                    Direction::Low
                } else {
                    return None;
                };
                Some(OutlierFlag {
                    pair: i,
                    label,
                    direction,
                    z: (d - s.median) / (iqr / 1.349),
                })
            })
            .collect();
        found.sort_by(|a, b| pairs[a.pair].distance.total_cmp(&pairs[b.pair].distance).then(a.pair.cmp(&b.pair)));
        flags.extend(found);
    }
    flags
}
