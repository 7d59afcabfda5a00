use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One human annotation: true label, annotated label and response time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub label: usize,
    pub annotated: usize,
    pub time_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Bits,
    Nats,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Bits => x.log2(),
            LogBase::Nats => x.ln(),
        }
    }
}

/// I(y_h; y) = Σ_ij (n_ij/N) · log(N·n_ij / (n_i·n_j)) over the joint label
/// table; empty cells contribute nothing.
pub fn mutual_information(records: &[AnnotationRecord], base: LogBase) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no annotation records".into()));
    }
    let n = records.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut annotated: BTreeMap<usize, usize> = BTreeMap::new();
    let mut truth: BTreeMap<usize, usize> = BTreeMap::new();
    for r in records {
        *joint.entry((r.annotated, r.label)).or_default() += 1;
        *annotated.entry(r.annotated).or_default() += 1;
        *truth.entry(r.label).or_default() += 1;
    }
    let mi = joint
        .iter()
        .map(|(&(i, j), &nij)| {
            let nij = nij as f64;
            let ni = annotated[&i] as f64;
            let nj = truth[&j] as f64;
            nij / n * base.log(n * nij / (ni * nj))
        })
        .sum::<f64>();
    // rounding can leave a tiny negative value for independent labels
    Ok(mi.max(0.0))
}

/// Entropy of a label sequence.
pub fn entropy(labels: &[usize], base: LogBase) -> f64 {
    let n = labels.len() as f64;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    -counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            p * base.log(p)
        })
        .sum::<f64>()
}

/// Information transfer rate: mutual information divided by mean response time.
pub fn itr(records: &[AnnotationRecord], base: LogBase) -> Result<f64> {
    if let Some(bad) = records
        .iter()
        .position(|r| !(r.time_seconds > 0.0 && r.time_seconds.is_finite()))
    {
        return Err(Error::InvalidInput(format!(
            "rejected record {bad}: response time must be finite and positive, got {}",
            records[bad].time_seconds
        )));
    }
    let mi = mutual_information(records, base)?;
    let mean_time = records.iter().map(|r| r.time_seconds).sum::<f64>() / records.len() as f64;
    Ok(mi / mean_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn recs(y: &[usize], yh: &[usize], t: f64) -> Vec<AnnotationRecord> {
        y.iter()
            .zip(yh)
            .map(|(&label, &annotated)| AnnotationRecord {
                label,
                annotated,
                time_seconds: t,
            })
            .collect()
    }

    /// Direct evaluation of the double sum over a 2×2 table.
    fn brute_force_mi(y: &[usize], yh: &[usize]) -> f64 {
        let n = y.len() as f64;
        let mut total = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let nij = y.iter().zip(yh).filter(|&(&a, &b)| b == i && a == j).count() as f64;
                let ni = yh.iter().filter(|&&b| b == i).count() as f64;
                let nj = y.iter().filter(|&&a| a == j).count() as f64;
                if nij > 0.0 {
                    total += nij / n * (n * nij / (ni * nj)).log2();
                }
            }
        }
        total
    }

    #[test]
    fn perfect_balanced_binary_is_one_bit() {
        let r = recs(&[0, 1, 0, 1], &[0, 1, 0, 1], 10.0);
        assert!((mutual_information(&r, LogBase::Bits).unwrap() - 1.0).abs() < 1e-15);
        assert!((mutual_information(&r, LogBase::Nats).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((itr(&r, LogBase::Bits).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn constant_annotation_is_zero() {
        let r = recs(&[0, 1, 0, 1], &[1, 1, 1, 1], 3.0);
        assert_eq!(mutual_information(&r, LogBase::Bits).unwrap(), 0.0);
        assert_eq!(itr(&r, LogBase::Bits).unwrap(), 0.0);
    }

    #[test]
    fn partial_agreement() {
        let y = [0, 0, 1, 1];
        let yh = [0, 0, 1, 0];
        let oracle = brute_force_mi(&y, &yh);
        assert!((oracle - 0.311_278_124_459_132_8).abs() < 1e-12);
        let r = recs(&y, &yh, 2.0);
        let mi = mutual_information(&r, LogBase::Bits).unwrap();
        assert!((mi - oracle).abs() < 1e-12);
        assert!((itr(&r, LogBase::Bits).unwrap() - oracle / 2.0).abs() < 1e-12);
    }

    #[test]
    fn bad_records() {
        assert!(mutual_information(&[], LogBase::Bits).is_err());
        assert!(itr(&recs(&[0], &[0], 0.0), LogBase::Bits).is_err());
        assert!(itr(&recs(&[0], &[0], -1.0), LogBase::Bits).is_err());
        assert!(itr(&recs(&[0], &[0], f64::NAN), LogBase::Bits).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..50)) {
            let y: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let yh: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let a = mutual_information(&recs(&y, &yh, 1.0), LogBase::Bits).unwrap();
            let b = mutual_information(&recs(&yh, &y, 1.0), LogBase::Bits).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            let bound = entropy(&y, LogBase::Bits).min(entropy(&yh, LogBase::Bits));
            prop_assert!(a <= bound + 1e-12);
            prop_assert!(a >= 0.0);
        }
    }
}
