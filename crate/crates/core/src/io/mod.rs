//! File formats for keypoint sets, subject metadata, cohort manifests and
//! distance outputs.

mod distances;
mod keypoints;
mod labels;
mod manifest;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};

pub use distances::{read_distances, read_distances_from, write_distances, write_distances_to, DistanceFormat};
pub use keypoints::{
    parse_keypoints, read_keypoint_file, read_legacy_keypoints, render_keypoints, write_keypoint_file,
    LegacyLayout,
};
pub use labels::{read_labels_csv, read_labels_from, write_labels_csv, write_labels_to, LABELS_HEADER};
pub use manifest::{CohortManifest, ManifestEntry};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Formats a distance for text output; `+inf` becomes `inf`.
pub fn format_distance(d: f64) -> String {
    if d == f64::INFINITY {
        "inf".to_string()
    } else {
        d.to_string()
    }
}

/// Parses a distance token, accepting `inf`.
pub fn parse_distance(token: &str) -> Option<f64> {
    match token.trim() {
        "inf" | "+inf" | "Inf" => Some(f64::INFINITY),
        t => t.parse().ok(),
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(line, e.to_string())
}
