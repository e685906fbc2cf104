//! Relationship statistics over a distance matrix and subject metadata.

pub mod family;
pub mod outliers;
pub mod pedigree;
pub mod regression;
pub mod roc;
pub mod stats;

pub use family::{predict_families, predict_family, FamilyPrediction};
pub use outliers::{flag_outliers, Direction, OutlierFlag, OutlierRule};
pub use pedigree::{derive_pair_labels, label_pairs, pair_label, LabeledPair, PairLabels, PairTable, PedigreeIssue};
pub use regression::{correspondence_errors, least_squares, scale_error_regression, ErrorSample, LinearFit, ScaleErrorFit};
pub use roc::{auc_pair_counting, roc_auc, roc_from_scores, RocCurve};
pub use stats::{
    conditional_distributions, kolmogorov_survival, ks_permutation, ks_statistic, ks_two_sample, quantile, summarize, GroupDistribution,
    Grouping, KsResult, Summary,
};
