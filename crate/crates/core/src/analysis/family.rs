//! Family prediction by nearest neighbor distance.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DistanceMatrix, SubjectRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyPrediction {
    pub subject_id: String,
    pub neighbor_id: String,
    pub distance: f64,
    pub predicted_family: String,
}

/// Family of the nearest other subject; equal distances resolve to the
/// lexicographically smallest subject id. Other images of the same subject
/// are skipped.
pub fn predict_family(subject: usize, matrix: &DistanceMatrix, records: &[SubjectRecord]) -> Result<FamilyPrediction> {
    let ids = matrix.subject_ids();
    if ids.len() < 2 {
        return Err(Error::InvalidConfig("family prediction needs at least 2 subjects".into()));
    }
    let me = &ids[subject];
    let row = matrix.row(subject);
    let best = (0..ids.len())
        .filter(|&j| ids[j] != *me)
        .min_by(|&a, &b| row[a].total_cmp(&row[b]).then_with(|| ids[a].cmp(&ids[b])))
        .ok_or_else(|| Error::InvalidConfig(format!("no other subject than {me}")))?;
    let family = records
        .iter()
        .find(|r| r.subject_id == ids[best])
        .ok_or_else(|| Error::UnknownSubject(ids[best].clone()))?
        .family_id
        .clone();
    Ok(FamilyPrediction {
        subject_id: me.clone(),
        neighbor_id: ids[best].clone(),
        distance: row[best],
        predicted_family: family,
    })
}

/// Predictions for every subject in matrix order.
pub fn predict_families(matrix: &DistanceMatrix, records: &[SubjectRecord]) -> Result<Vec<FamilyPrediction>> {
    let known: HashMap<&str, ()> = records.iter().map(|r| (r.subject_id.as_str(), ())).collect();
    if let Some(id) = matrix.subject_ids().iter().find(|id| !known.contains_key(id.as_str())) {
        return Err(Error::UnknownSubject(id.clone()));
    }
    (0..matrix.len()).map(|i| predict_family(i, matrix, records)).collect()
}
