//! Robustness and quality metrics over attributions.

mod infidelity;
mod information;
mod ranking;
mod robustness;

pub use infidelity::{infidelity, Infidelity};
pub use information::{entropy, itr, mutual_information, AnnotationRecord, LogBase};
pub use ranking::{jaccard, jaccard_at_k, top_k_count, top_k_percent, RankedSet, DEFAULT_K_PERCENT};
pub use robustness::{
    diffinit_test, histogram, overlap, randomization_test, untrained_test, DocAttributions,
    DocJaccard, RobustnessReport, RobustnessSummary, TestKind, HISTOGRAM_BINS,
};
