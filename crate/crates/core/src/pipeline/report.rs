use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attribution::Method;
use crate::corpus::Granularity;
use crate::error::{Error, Result};
use crate::evaluation::{Infidelity, RobustnessReport, TestKind, HISTOGRAM_BINS};
use crate::util::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub model: String,
    /// None for the randomized-head model, which is not trained.
    pub selected_learning_rate: Option<f64>,
    pub stopping_epoch: Option<usize>,
    pub best_validation_accuracy: Option<f64>,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub pair: String,
    pub documents: usize,
    pub common_predictions: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessEntry {
    /// Method that produced the sentence-level attributions.
    pub method: Method,
    pub report: RobustnessReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapRow {
    pub method: Method,
    pub granularity: Granularity,
    pub runs: usize,
    pub per_document: Vec<(String, f64)>,
}

impl OverlapRow {
    pub fn median(&self) -> Option<f64> {
        median(&self.per_document.iter().map(|p| p.1).collect::<Vec<_>>())
    }

    /// Per-document `self − other` over the documents both rows cover.
    pub fn differences(&self, other: &OverlapRow) -> Vec<(String, f64)> {
        let theirs: std::collections::HashMap<&str, f64> =
            other.per_document.iter().map(|(id, v)| (id.as_str(), *v)).collect();
        self.per_document
            .iter()
            .filter_map(|(id, v)| theirs.get(id.as_str()).map(|t| (id.clone(), v - t)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfidelityRow {
    pub method: Method,
    pub granularity: Granularity,
    pub per_document: Vec<(String, Infidelity)>,
}

impl InfidelityRow {
    pub fn median_percent(&self) -> Option<f64> {
        median(&self.per_document.iter().map(|p| p.1.percent).collect::<Vec<_>>())
    }

    pub fn mean_percent(&self) -> Option<f64> {
        let n = self.per_document.len();
        (n > 0).then(|| self.per_document.iter().map(|p| p.1.percent).sum::<f64>() / n as f64)
    }

    pub fn non_flipped(&self) -> usize {
        self.per_document.iter().filter(|p| !p.1.flipped).count()
    }
}

/// Everything the evaluation stage computes.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResults {
    pub dataset: String,
    pub k_percent: f64,
    pub accuracy: Vec<AccuracyRow>,
    pub agreement: Vec<AgreementRow>,
    pub robustness: Vec<RobustnessEntry>,
    pub overlap: Vec<OverlapRow>,
    pub infidelity: Vec<InfidelityRow>,
}

impl EvaluationResults {
    pub fn robustness(&self, kind: TestKind, method: Method) -> Option<&RobustnessReport> {
        self.robustness
            .iter()
            .find(|e| e.report.kind == kind && e.method == method)
            .map(|e| &e.report)
    }

    pub fn agreement(&self, pair: &str) -> Option<&AgreementRow> {
        self.agreement.iter().find(|a| a.pair == pair)
    }

    pub fn overlap(&self, method: Method, granularity: Granularity) -> Option<&OverlapRow> {
        self.overlap
            .iter()
            .find(|o| o.method == method && o.granularity == granularity)
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn pair_label(kind: TestKind) -> &'static str {
    match kind {
        TestKind::DiffInit => "d1-d2",
        TestKind::Untrained => "d1-r",
    }
}

struct Emitter<'a> {
    root: &'a Path,
    written: Vec<PathBuf>,
}

impl Emitter<'_> {
    fn path(&self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        Ok(path)
    }

    fn csv(&mut self, rel: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let path = self.path(rel)?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let path = self.path(rel)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

/// Writes every table, per-document file, JSON summary and histogram under
/// `dir` and returns the written paths in order.
pub fn emit_report(results: &EvaluationResults, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Emitter {
        root: dir,
        written: Vec::new(),
    };

    out.csv(
        "accuracy.csv",
        &["dataset", "model", "selected_learning_rate", "stopping_epoch", "best_validation_accuracy", "test_accuracy"],
        results
            .accuracy
            .iter()
            .map(|a| {
                vec![
                    results.dataset.clone(),
                    a.model.clone(),
                    opt(a.selected_learning_rate),
                    opt(a.stopping_epoch),
                    opt(a.best_validation_accuracy),
                    a.test_accuracy.to_string(),
                ]
            })
            .collect(),
    )?;
    out.csv(
        "agreement.csv",
        &["dataset", "pair", "documents", "common_predictions", "percent_common_predictions"],
        results
            .agreement
            .iter()
            .map(|a| {
                vec![
                    results.dataset.clone(),
                    a.pair.clone(),
                    a.documents.to_string(),
                    a.common_predictions.to_string(),
                    a.percent.to_string(),
                ]
            })
            .collect(),
    )?;

    for (kind, direct_file, indirect_file) in [
        (TestKind::DiffInit, "table1_diffinit.csv", "table_indirect_diffinit.csv"),
        (TestKind::Untrained, "table2_untrained.csv", "table_indirect_untrained.csv"),
    ] {
        let median_header = format!("median_js_minus_jt ({})", kind.sign_convention());
        let header = [
            "dataset",
            "models",
            "method",
            "k_percent",
            "compared",
            "excluded",
            median_header.as_str(),
        ];
        let row = |e: &RobustnessEntry| {
            vec![
                results.dataset.clone(),
                pair_label(kind).to_string(),
                e.method.to_string(),
                e.report.k_percent.to_string(),
                e.report.per_document.len().to_string(),
                e.report.excluded_count.to_string(),
                opt(e.report.median_diff),
            ]
        };
        let of_kind = || results.robustness.iter().filter(|e| e.report.kind == kind);
        out.csv(
            direct_file,
            &header,
            of_kind().filter(|e| e.method == Method::ShapDirect).map(row).collect(),
        )?;
        out.csv(
            indirect_file,
            &header,
            of_kind().filter(|e| e.method != Method::ShapDirect).map(row).collect(),
        )?;
    }

    for e in &results.robustness {
        let stem = format!("{}_{}", e.report.kind.as_str(), e.method);
        out.csv(
            &format!("per_document/{stem}.csv"),
            &["doc_id", "j_t", "j_s", "diff"],
            e.report
                .per_document
                .iter()
                .map(|d| {
                    vec![
                        d.doc_id.clone(),
                        d.j_token.to_string(),
                        d.j_sentence.to_string(),
                        d.diff.to_string(),
                    ]
                })
                .collect(),
        )?;
        out.json(&format!("summaries/{stem}.json"), &e.report.summary())?;
        let last = (HISTOGRAM_BINS - 1) as f64;
        out.csv(
            &format!("histograms/{stem}.csv"),
            &["bin", "center", "count_t", "count_s"],
            (0..HISTOGRAM_BINS)
                .map(|i| {
                    vec![
                        i.to_string(),
                        (i as f64 / last).to_string(),
                        e.report.histogram_token[i].to_string(),
                        e.report.histogram_sentence[i].to_string(),
                    ]
                })
                .collect(),
        )?;
    }

    out.csv(
        "overlap.csv",
        &["dataset", "model", "method", "granularity", "runs", "documents", "median_overlap"],
        results
            .overlap
            .iter()
            .map(|o| {
                vec![
                    results.dataset.clone(),
                    "d1".into(),
                    o.method.to_string(),
                    o.granularity.to_string(),
                    o.runs.to_string(),
                    o.per_document.len().to_string(),
                    opt(o.median()),
                ]
            })
            .collect(),
    )?;
    if let Some(token) = results.overlap(Method::ShapDirect, Granularity::Token) {
        let rows = results
            .overlap
            .iter()
            .filter(|o| o.granularity == Granularity::Sentence)
            .map(|o| {
                let diffs: Vec<f64> = o.differences(token).into_iter().map(|d| d.1).collect();
                vec![
                    results.dataset.clone(),
                    "d1".into(),
                    o.method.to_string(),
                    o.runs.to_string(),
                    diffs.len().to_string(),
                    opt(o.median()),
                    opt(token.median()),
                    opt(median(&diffs)),
                ]
            })
            .collect();
        out.csv(
            "table3_overlap.csv",
            &[
                "dataset",
                "model",
                "sentence_method",
                "runs",
                "documents",
                "median_overlap_s",
                "median_overlap_t",
                "median_overlap_s_minus_overlap_t (positive: sentences more stable)",
            ],
            rows,
        )?;
    }
    for o in &results.overlap {
        out.csv(
            &format!("per_document/overlap_{}_{}.csv", o.method, o.granularity),
            &["doc_id", "overlap"],
            o.per_document
                .iter()
                .map(|(id, v)| vec![id.clone(), v.to_string()])
                .collect(),
        )?;
    }

    out.csv(
        "infidelity.csv",
        &[
            "dataset",
            "model",
            "method",
            "granularity",
            "documents",
            "median_percent_tokens_dropped",
            "mean_percent_tokens_dropped",
            "never_flipped",
        ],
        results
            .infidelity
            .iter()
            .map(|r| {
                vec![
                    results.dataset.clone(),
                    "d1".into(),
                    r.method.to_string(),
                    r.granularity.to_string(),
                    r.per_document.len().to_string(),
                    opt(r.median_percent()),
                    opt(r.mean_percent()),
                    r.non_flipped().to_string(),
                ]
            })
            .collect(),
    )?;
    for r in &results.infidelity {
        out.csv(
            &format!("per_document/infidelity_{}_{}.csv", r.method, r.granularity),
            &["doc_id", "percent", "masked_tokens", "flipped"],
            r.per_document
                .iter()
                .map(|(id, i)| {
                    vec![
                        id.clone(),
                        i.percent.to_string(),
                        i.masked_tokens.to_string(),
                        i.flipped.to_string(),
                    ]
                })
                .collect(),
        )?;
    }
    Ok(out.written)
}
