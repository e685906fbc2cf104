//! Domain types shared across the crate.
//!
//! These carry invariant checks only; every algorithm lives in its own module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Field, Result};

/// Default descriptor length of a SIFT-Rank style keypoint.
pub const DEFAULT_DESCRIPTOR_DIM: usize = 64;

/// One salient image feature: location (mm), scale (mm) and appearance descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Keypoint {
    pub location: [f64; 3],
    pub scale: f64,
    pub descriptor: Vec<f32>,
}

impl Keypoint {
    pub fn new(location: [f64; 3], scale: f64, descriptor: Vec<f32>) -> Self {
        Keypoint {
            location,
            scale,
            descriptor,
        }
    }

    fn check(&self, dim: usize, index: usize) -> Result<()> {
        let violation = |field| Error::InvariantViolation {
            field,
            index: Some(index),
        };
        if !self.location.iter().all(|v| v.is_finite()) {
            return Err(violation(Field::Location));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(violation(Field::Scale));
        }
        if self.descriptor.len() != dim {
            return Err(violation(Field::DescriptorDim));
        }
        if !self.descriptor.iter().all(|v| v.is_finite()) {
            return Err(violation(Field::Descriptor));
        }
        Ok(())
    }
}

/// All keypoints extracted from one image.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSet {
    pub subject_id: String,
    pub descriptor_dim: usize,
    pub keypoints: Vec<Keypoint>,
}

impl KeypointSet {
    /// Builds a set and checks every invariant.
    pub fn new(
        subject_id: impl Into<String>,
        descriptor_dim: usize,
        keypoints: Vec<Keypoint>,
    ) -> Result<Self> {
        validate_set(KeypointSet {
            subject_id: subject_id.into(),
            descriptor_dim,
            keypoints,
        })
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

/// Returns the set unchanged if all type invariants hold, otherwise the first violation.
pub fn validate_set(set: KeypointSet) -> Result<KeypointSet> {
    if set.subject_id.is_empty() {
        return Err(Error::InvariantViolation {
            field: Field::SubjectId,
            index: None,
        });
    }
    if set.descriptor_dim == 0 {
        return Err(Error::InvariantViolation {
            field: Field::DescriptorDim,
            index: None,
        });
    }
    for (i, kp) in set.keypoints.iter().enumerate() {
        kp.check(set.descriptor_dim, i)?;
    }
    Ok(set)
}

macro_rules! token_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $($token:literal)|+),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => token_enum!(@first $($token)|+)),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim() {
                    $($($token)|+ => Ok($name::$variant),)+
                    other => Err(format!("unknown {} token {:?}", stringify!($name), other)),
                }
            }
        }
    };
    (@first $first:literal $(| $rest:literal)*) => { $first };
}

token_enum!(
    /// Twin status as recorded in cohort metadata.
    Zygosity {
        Mz => "MZ" | "mz",
        Dz => "DZ" | "dz",
        NotTwin => "NotTwin" | "NT" | "nottwin",
        Unknown => "Unknown" | "" | "unknown",
    }
);

token_enum!(
    Sex {
        M => "M" | "m",
        F => "F" | "f",
    }
);

token_enum!(
    /// Relationship label of an unordered subject pair.
    PairLabel {
        Mz => "MZ",
        Dz => "DZ",
        Fs => "FS",
        Hs => "HS",
        Ur => "UR",
    }
);

impl PairLabel {
    pub const ALL: [PairLabel; 5] = [
        PairLabel::Mz,
        PairLabel::Dz,
        PairLabel::Fs,
        PairLabel::Hs,
        PairLabel::Ur,
    ];

    pub fn is_sibling(&self) -> bool {
        !matches!(self, PairLabel::Ur)
    }
}

/// Demographic and pedigree metadata of one subject. Empty parent ids mean unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub family_id: String,
    pub mother_id: String,
    pub father_id: String,
    pub zygosity: Zygosity,
    pub sex: Sex,
    pub race: String,
    pub age: f64,
}

/// Symmetric matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    subject_ids: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Checks symmetry (bit-exact), zero diagonal and non-negativity.
    pub fn new(subject_ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = subject_ids.len();
        if values.len() != n * n {
            return Err(Error::InvalidConfig(format!(
                "distance matrix needs {} values for {n} subjects, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i].to_bits() != 0.0f64.to_bits() {
                return Err(Error::InvalidConfig(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if a.to_bits() != b.to_bits() {
                    return Err(Error::InvalidConfig(format!("asymmetric entry ({i}, {j})")));
                }
                if a.is_nan() || a < 0.0 {
                    return Err(Error::InvalidConfig(format!("invalid distance {a} at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix { subject_ids, values })
    }

    /// Builds a matrix from a function evaluated on the upper triangle `i < j`.
    pub fn from_upper(
        subject_ids: Vec<String>,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let n = subject_ids.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        DistanceMatrix::new(subject_ids, values)
    }

    pub fn len(&self) -> usize {
        self.subject_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subject_ids.is_empty()
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn position(&self, subject_id: &str) -> Option<usize> {
        self.subject_ids.iter().position(|s| s == subject_id)
    }

    /// Upper-triangle entries `(i, j, d)` with `i < j`, in row order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j, self.get(i, j))))
    }
}

/// Which soft-equivalence kernel the pipeline evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMode {
    /// Binary equivalence: any kNN candidate counts as a match.
    Hse,
    /// Appearance kernel only.
    SseApp,
    /// Appearance times location and scale kernels.
    SseAppGeo,
}

impl FromStr for KernelMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "hse" => Ok(KernelMode::Hse),
            "app" => Ok(KernelMode::SseApp),
            "app+geo" => Ok(KernelMode::SseAppGeo),
            other => Err(format!("unknown kernel {other:?} (expected hse, app, app+geo)")),
        }
    }
}

impl fmt::Display for KernelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelMode::Hse => "hse",
            KernelMode::SseApp => "app",
            KernelMode::SseAppGeo => "app+geo",
        })
    }
}

/// How the adaptive appearance bandwidth becomes the kernel denominator.
///
/// Both variants give the minimum squared external descriptor distance, so a
/// query's nearest external neighbor always scores `exp(-1)`. They differ only
/// in whether the value is taken directly or recomposed from a root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AlphaConvention {
    /// Denominator is the minimum squared distance itself.
    #[default]
    MinSquaredDistance,
    /// Denominator is the square of the minimum (non-squared) distance.
    MinDistance,
}

impl AlphaConvention {
    /// Maps a minimum positive squared descriptor distance to the kernel denominator.
    pub fn denominator(&self, min_squared_distance: f64) -> f64 {
        match self {
            AlphaConvention::MinSquaredDistance => min_squared_distance,
            AlphaConvention::MinDistance => {
                let d = min_squared_distance.sqrt();
                d * d
            }
        }
    }
}

impl FromStr for AlphaConvention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "minsq" => Ok(AlphaConvention::MinSquaredDistance),
            "min" => Ok(AlphaConvention::MinDistance),
            other => Err(format!("unknown alpha convention {other:?} (expected minsq, min)")),
        }
    }
}

impl fmt::Display for AlphaConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaConvention::MinSquaredDistance => "minsq",
            AlphaConvention::MinDistance => "min",
        })
    }
}

/// Kernel parameters shared by every pairwise evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub mode: KernelMode,
    /// Nearest neighbors retrieved per query keypoint.
    pub k: usize,
    pub alpha: AlphaConvention,
    /// In HSE mode only candidates ranked below this limit count as hard
    /// matches; `None` counts the whole kNN list.
    pub hse_rank_limit: Option<usize>,
    /// Multiplies the location and scale kernel denominators.
    pub geometry_bandwidth: f64,
    /// Geometry kernels assume a common spatial frame; a warning is logged otherwise.
    pub assume_aligned: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            mode: KernelMode::SseAppGeo,
            k: 200,
            alpha: AlphaConvention::MinSquaredDistance,
            hse_rank_limit: None,
            geometry_bandwidth: 1.0,
            assume_aligned: true,
        }
    }
}

impl KernelConfig {
    pub fn with_mode(mode: KernelMode, k: usize) -> Self {
        KernelConfig {
            mode,
            k,
            ..KernelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.hse_rank_limit == Some(0) {
            return Err(Error::InvalidConfig("hse rank limit must be at least 1".into()));
        }
        if !(self.geometry_bandwidth.is_finite() && self.geometry_bandwidth > 0.0) {
            return Err(Error::InvalidConfig("geometry bandwidth must be positive".into()));
        }
        Ok(())
    }
}
