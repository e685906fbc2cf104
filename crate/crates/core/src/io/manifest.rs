//! Cohort manifest (TOML): a labels file and one keypoint file per subject.
//!
//! ```toml
//! labels = "labels.csv"
//!
//! [[subjects]]
//! id = "S0001"
//! keypoints = "keypoints/S0001.skj"
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::KeypointSet;

use super::{read_keypoint_file, read_string};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub keypoints: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortManifest {
    pub labels: PathBuf,
    pub subjects: Vec<ManifestEntry>,
}

impl CohortManifest {
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        let mut paths = HashSet::new();
        for s in &self.subjects {
            if !ids.insert(&s.id) {
                return Err(Error::DuplicateSubject(s.id.clone()));
            }
            if !paths.insert(&s.keypoints) {
                return Err(Error::InvalidConfig(format!(
                    "keypoint file {} listed twice",
                    s.keypoints.display()
                )));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: CohortManifest = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start.min(text.len())].lines().count().max(1));
            Error::parse(line, e.message().to_string())
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("manifest fields are always representable")
    }

    /// Loads a manifest and rewrites relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut m = CohortManifest::parse(&read_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        m.labels = base.join(&m.labels);
        for s in &mut m.subjects {
            s.keypoints = base.join(&s.keypoints);
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    /// Reads every keypoint file in manifest order; each file's subject id
    /// must equal its entry id.
    pub fn read_cohort(&self) -> Result<Vec<KeypointSet>> {
        self.subjects
            .iter()
            .map(|s| {
                let set = read_keypoint_file(&s.keypoints)?;
                if set.subject_id != s.id {
                    return Err(Error::InvalidConfig(format!(
                        "{} declares subject {:?}, manifest says {:?}",
                        s.keypoints.display(),
                        set.subject_id,
                        s.id
                    )));
                }
                Ok(set)
            })
            .collect()
    }
}
