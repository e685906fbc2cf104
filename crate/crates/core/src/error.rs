use std::fmt;
use std::path::PathBuf;

/// Keypoint field that failed an invariant check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    SubjectId,
    Location,
    Scale,
    Descriptor,
    DescriptorDim,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Field::SubjectId => "subject_id",
            Field::Location => "location",
            Field::Scale => "scale",
            Field::Descriptor => "descriptor",
            Field::DescriptorDim => "descriptor_dim",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invariant violated on {field}{}", index.map(|i| format!(" at keypoint {i}")).unwrap_or_default())]
    InvariantViolation { field: Field, index: Option<usize> },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("declared count {declared} but found {actual} records")]
    CountMismatch { declared: usize, actual: usize },

    #[error("descriptor dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("duplicate subject id {0:?}")]
    DuplicateSubject(String),

    #[error("unknown subject id {0:?}")]
    UnknownSubject(String),

    #[error("cohort is empty")]
    EmptyCohort,

    #[error("no external neighbor with positive descriptor distance")]
    NoExternalNeighbor,

    #[error("kernel bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("keypoint scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("jaccard index undefined for two empty sets")]
    UndefinedForEmptyPair,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("no consensus: best inlier count {0} is below 3")]
    NoConsensus(usize),

    #[error("sample is empty")]
    EmptySample,

    #[error("both classes are required for an ROC curve")]
    OneClassMissing,

    #[error("group is empty after exclusions")]
    EmptyGroup,

    #[error("degenerate regression: {0}")]
    DegenerateFit(&'static str),

    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed index file: {0}")]
    BadIndexFile(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
