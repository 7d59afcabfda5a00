use std::collections::BTreeSet;

use crate::attribution::Attribution;
use crate::corpus::Granularity;
use crate::error::{Error, Result};

pub const DEFAULT_K_PERCENT: f64 = 25.0;

/// Indices of the top-K% features of one attribution.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSet {
    pub indices: BTreeSet<usize>,
    pub k_percent: f64,
    pub granularity: Granularity,
}

/// ceil(K/100 · M), computed as ceil(K·M/100) so integral products are exact.
pub fn top_k_count(m: usize, k_percent: f64) -> usize {
    let raw = k_percent * m as f64 / 100.0;
    ((raw - 1e-9).ceil().max(1.0) as usize).min(m)
}

/// Features with the largest signed φ; ties go to the lower index.
pub fn top_k_percent(attribution: &Attribution, k_percent: f64) -> Result<RankedSet> {
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(Error::Config(format!("K must lie in (0, 100], got {k_percent}")));
    }
    let m = attribution.len();
    if m == 0 {
        return Err(Error::InvalidInput("attribution has no features".into()));
    }
    let n = top_k_count(m, k_percent);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        attribution.values[b]
            .total_cmp(&attribution.values[a])
            .then(a.cmp(&b))
    });
    Ok(RankedSet {
        indices: order.into_iter().take(n).collect(),
        k_percent,
        granularity: attribution.granularity(),
    })
}

/// |a ∩ b| / |a ∪ b|; two empty sets count as identical.
pub fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Jaccard@K% between two attributions of the same document and granularity.
pub fn jaccard_at_k(a: &Attribution, b: &Attribution, k_percent: f64) -> Result<f64> {
    if a.granularity() != b.granularity() {
        return Err(Error::Mismatch(format!(
            "cannot compare {} and {} attributions",
            a.granularity(),
            b.granularity()
        )));
    }
    if a.doc_id != b.doc_id || a.len() != b.len() {
        return Err(Error::Mismatch(format!(
            "attributions describe different documents ({} vs {})",
            a.doc_id, b.doc_id
        )));
    }
    let ra = top_k_percent(a, k_percent)?;
    let rb = top_k_percent(b, k_percent)?;
    Ok(jaccard(&ra.indices, &rb.indices))
}
