use serde::{Deserialize, Serialize};

use crate::attribution::Attribution;
use crate::error::{Error, Result};
use crate::util::median;

use super::ranking::jaccard_at_k;

pub const HISTOGRAM_BINS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    DiffInit,
    Untrained,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::DiffInit => "diffinit",
            TestKind::Untrained => "untrained",
        }
    }

    /// How to read the sign of median(J_s − J_t) for this test.
    pub fn sign_convention(self) -> &'static str {
        match self {
            TestKind::DiffInit => "positive means sentences more robust",
            TestKind::Untrained => "negative means sentences more robust",
        }
    }
}

/// Token- and sentence-granularity attributions of one document from one model.
#[derive(Debug, Clone, PartialEq)]
pub struct DocAttributions {
    pub token: Attribution,
    pub sentence: Attribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocJaccard {
    pub doc_id: String,
    pub j_token: f64,
    pub j_sentence: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub kind: TestKind,
    pub k_percent: f64,
    pub per_document: Vec<DocJaccard>,
    /// median(J_s − J_t) over compared documents; `None` if every document was excluded.
    pub median_diff: Option<f64>,
    pub histogram_token: Vec<usize>,
    pub histogram_sentence: Vec<usize>,
    /// Documents dropped because the two models predicted different classes.
    pub excluded_count: usize,
}

/// JSON summary of a [`RobustnessReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    pub test: TestKind,
    pub sign_convention: String,
    pub k_percent: f64,
    pub compared_count: usize,
    pub median_diff: Option<f64>,
    pub histogram_t: Vec<usize>,
    pub histogram_s: Vec<usize>,
    pub excluded_count: usize,
}

impl RobustnessReport {
    pub fn summary(&self) -> RobustnessSummary {
        RobustnessSummary {
            test: self.kind,
            sign_convention: self.kind.sign_convention().to_string(),
            k_percent: self.k_percent,
            compared_count: self.per_document.len(),
            median_diff: self.median_diff,
            histogram_t: self.histogram_token.clone(),
            histogram_s: self.histogram_sentence.clone(),
            excluded_count: self.excluded_count,
        }
    }

    pub fn agreement(&self) -> f64 {
        let total = self.per_document.len() + self.excluded_count;
        if total == 0 {
            return f64::NAN;
        }
        self.per_document.len() as f64 / total as f64
    }
}

/// Counts of values in [0, 1] over 21 equal bins centred on 0, 0.05, …, 1.
pub fn histogram(values: &[f64]) -> Vec<usize> {
    let mut bins = vec![0; HISTOGRAM_BINS];
    let last = (HISTOGRAM_BINS - 1) as f64;
    for &v in values {
        let i = (v.clamp(0.0, 1.0) * last).round() as usize;
        bins[i] += 1;
    }
    bins
}

/// Compares per-document attributions from two models at both granularities.
pub fn randomization_test(
    kind: TestKind,
    first: &[DocAttributions],
    second: &[DocAttributions],
    k_percent: f64,
) -> Result<RobustnessReport> {
    if first.is_empty() {
        return Err(Error::InvalidInput("no documents to compare".into()));
    }
    if first.len() != second.len() {
        return Err(Error::Mismatch(format!(
            "{} documents against {}",
            first.len(),
            second.len()
        )));
    }
    let mut per_document = Vec::new();
    let mut excluded_count = 0;
    for (a, b) in first.iter().zip(second) {
        if a.token.doc_id != b.token.doc_id || a.sentence.doc_id != a.token.doc_id {
            return Err(Error::Mismatch(format!(
                "document lists are not aligned at {} / {}",
                a.token.doc_id, b.token.doc_id
            )));
        }
        if a.token.target_class != b.token.target_class {
            excluded_count += 1;
            continue;
        }
        let j_token = jaccard_at_k(&a.token, &b.token, k_percent)?;
        let j_sentence = jaccard_at_k(&a.sentence, &b.sentence, k_percent)?;
        per_document.push(DocJaccard {
            doc_id: a.token.doc_id.clone(),
            j_token,
            j_sentence,
            diff: j_sentence - j_token,
        });
    }
    let diffs: Vec<f64> = per_document.iter().map(|d| d.diff).collect();
    let jt: Vec<f64> = per_document.iter().map(|d| d.j_token).collect();
    let js: Vec<f64> = per_document.iter().map(|d| d.j_sentence).collect();
    Ok(RobustnessReport {
        kind,
        k_percent,
        median_diff: median(&diffs),
        histogram_token: histogram(&jt),
        histogram_sentence: histogram(&js),
        per_document,
        excluded_count,
    })
}

/// Two models that differ only in their initialization seed.
pub fn diffinit_test(d1: &[DocAttributions], d2: &[DocAttributions], k_percent: f64) -> Result<RobustnessReport> {
    randomization_test(TestKind::DiffInit, d1, d2, k_percent)
}

/// A trained model against a copy whose head was re-randomized.
pub fn untrained_test(d1: &[DocAttributions], r: &[DocAttributions], k_percent: f64) -> Result<RobustnessReport> {
    randomization_test(TestKind::Untrained, d1, r, k_percent)
}

/// Median pairwise Jaccard@K% across repeated attribution runs on one input.
pub fn overlap(runs: &[Attribution], k_percent: f64) -> Result<f64> {
    if runs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "overlap needs at least two runs, got {}",
            runs.len()
        )));
    }
    let mut pairs = Vec::with_capacity(runs.len() * (runs.len() - 1) / 2);
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            pairs.push(jaccard_at_k(&runs[i], &runs[j], k_percent)?);
        }
    }
    Ok(median(&pairs).expect("at least one pair"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::Method;
    use crate::corpus::{Granularity, Partition};

    fn attr(id: &str, granularity: Granularity, values: Vec<f64>, class: usize) -> Attribution {
        let m = values.len();
        let partition = match granularity {
            Granularity::Token => Partition::tokens(m).unwrap(),
            g => Partition::new(g, (0..m).map(|i| i..i + 1).collect(), m).unwrap(),
        };
        Attribution {
            doc_id: id.into(),
            partition,
            values,
            phi0: 0.0,
            target_class: class,
            method: Method::ShapDirect,
            seed: 0,
            budget_or_steps: 0,
        }
    }

    fn doc(id: &str, token: Vec<f64>, sentence: Vec<f64>, class: usize) -> DocAttributions {
        DocAttributions {
            token: attr(id, Granularity::Token, token, class),
            sentence: attr(id, Granularity::Sentence, sentence, class),
        }
    }

    #[test]
    fn identical_models() {
        let docs: Vec<_> = (0..5)
            .map(|i| doc(&format!("d{i}"), vec![0.1 * i as f64, 0.3, -0.2, 0.5], vec![0.4, 0.1], 0))
            .collect();
        let r = diffinit_test(&docs, &docs, 25.0).unwrap();
        assert!(r.per_document.iter().all(|d| d.j_token == 1.0 && d.j_sentence == 1.0));
        assert_eq!(r.median_diff, Some(0.0));
        assert_eq!(r.excluded_count, 0);
        assert_eq!(r.histogram_token[20], 5);
        assert_eq!(untrained_test(&docs, &docs, 25.0).unwrap().median_diff, Some(0.0));
    }

    #[test]
    fn hand_built_median() {
        // K = 50 on four tokens: J_t = 1/3 everywhere, J_s = [1, 1, 0]
        let a = vec![
            doc("a", vec![4.0, 3.0, 2.0, 1.0], vec![1.0, 0.0], 0),
            doc("b", vec![4.0, 3.0, 2.0, 1.0], vec![1.0, 0.0], 0),
            doc("c", vec![4.0, 3.0, 2.0, 1.0], vec![1.0, 0.0], 0),
        ];
        let b = vec![
            doc("a", vec![4.0, 1.0, 3.0, 2.0], vec![1.0, 0.0], 0),
            doc("b", vec![4.0, 1.0, 3.0, 2.0], vec![1.0, 0.0], 0),
            doc("c", vec![4.0, 1.0, 3.0, 2.0], vec![0.0, 1.0], 0),
        ];
        for test in [diffinit_test, untrained_test] {
            let r = test(&a, &b, 50.0).unwrap();
            let jt: Vec<f64> = r.per_document.iter().map(|d| d.j_token).collect();
            let js: Vec<f64> = r.per_document.iter().map(|d| d.j_sentence).collect();
            assert_eq!(jt, vec![1.0 / 3.0; 3]);
            assert_eq!(js, vec![1.0, 1.0, 0.0]);
        }
        // six tokens, top 3 each, two shared: J_t = 0.5
        let a6 = |id: &str, s: Vec<f64>| doc(id, vec![6.0, 5.0, 4.0, 3.0, 2.0, 1.0], s, 0);
        let b6 = |id: &str, s: Vec<f64>| doc(id, vec![6.0, 5.0, 1.0, 4.0, 3.0, 2.0], s, 0);
        let a = vec![a6("a", vec![1.0, 0.0]), a6("b", vec![1.0, 0.0]), a6("c", vec![1.0, 0.0])];
        let b = vec![b6("a", vec![1.0, 0.0]), b6("b", vec![1.0, 0.0]), b6("c", vec![0.0, 1.0])];
        let r = diffinit_test(&a, &b, 50.0).unwrap();
        assert!(r.per_document.iter().all(|d| d.j_token == 0.5));
        assert_eq!(r.median_diff, Some(0.5));
    }

    #[test]
    fn disjoint_tops_give_zero() {
        let a = vec![doc("a", vec![1.0, 0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0], 1)];
        let b = vec![doc("a", vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0], 1)];
        let r = untrained_test(&a, &b, 25.0).unwrap();
        assert_eq!(r.per_document[0].j_sentence, 0.0);
        assert_eq!(r.per_document[0].j_token, 0.0);
        assert_eq!(r.histogram_sentence[0], 1);
    }

    #[test]
    fn disagreeing_predictions_excluded() {
        let a = vec![doc("a", vec![1.0, 0.0], vec![1.0, 0.0], 0), doc("b", vec![1.0, 0.0], vec![1.0, 0.0], 0)];
        let b = vec![doc("a", vec![1.0, 0.0], vec![1.0, 0.0], 1), doc("b", vec![1.0, 0.0], vec![1.0, 0.0], 0)];
        let r = diffinit_test(&a, &b, 25.0).unwrap();
        assert_eq!(r.excluded_count, 1);
        assert_eq!(r.per_document.len(), 1);
        assert_eq!(r.agreement(), 0.5);
        let all_out = diffinit_test(&a[..1], &b[..1], 25.0).unwrap();
        assert_eq!(all_out.median_diff, None);
    }

    #[test]
    fn empty_and_misaligned() {
        assert!(diffinit_test(&[], &[], 25.0).is_err());
        let a = vec![doc("a", vec![1.0], vec![1.0], 0)];
        let b = vec![doc("b", vec![1.0], vec![1.0], 0)];
        assert!(diffinit_test(&a, &b, 25.0).is_err());
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[0.0, 0.5, 1.0]);
        assert_eq!(h.len(), 21);
        assert_eq!((h[0], h[10], h[20]), (1, 1, 1));
        assert_eq!(h.iter().sum::<usize>(), 3);
    }

    #[test]
    fn overlap_cases() {
        let a = attr("d", Granularity::Token, vec![0.9, 0.5, 0.1, 0.05], 0);
        let runs = vec![a.clone(); 4];
        assert_eq!(overlap(&runs, 25.0).unwrap(), 1.0);
        let b = attr("d", Granularity::Token, vec![0.1, 0.9, 0.5, 0.05], 0);
        assert_eq!(overlap(&[a.clone(), b.clone()], 25.0).unwrap(), 0.0);
        let r1 = attr("d", Granularity::Token, vec![4.0, 3.0, 2.0, 1.0], 0);
        let r2 = r1.clone();
        let r3 = attr("d", Granularity::Token, vec![1.0, 2.0, 4.0, 3.0], 0);
        let r4 = attr("d", Granularity::Token, vec![4.0, 1.0, 3.0, 2.0], 0);
        assert_eq!(jaccard_at_k(&r1, &r2, 50.0).unwrap(), 1.0);
        assert_eq!(jaccard_at_k(&r1, &r3, 50.0).unwrap(), 0.0);
        assert_eq!(jaccard_at_k(&r2, &r3, 50.0).unwrap(), 0.0);
        assert_eq!(overlap(&[r1.clone(), r2, r3], 50.0).unwrap(), 0.0);
        let r5 = attr("d", Granularity::Token, vec![4.0, 1.0, 3.0, 2.0], 0);
        // pairs (r1,r4)=1/3, (r1,r5)=1/3, (r4,r5)=1
        assert_eq!(overlap(&[r1, r4, r5], 50.0).unwrap(), 1.0 / 3.0);
        assert!(overlap(&[a], 25.0).is_err());
        assert_eq!(median(&[1.0, 0.5, 0.0]), Some(0.5));
    }
}
