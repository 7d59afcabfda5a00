use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{
    aggregate_indirect, default_budget, integrated_gradients, kernel_shap, Attribution, AttributionRecord, Method,
};
use crate::corpus::{load_dataset, make_partition, Dataset, Document, Granularity, Partition, Split, Vocab};
use crate::error::{Error, Result};
use crate::evaluation::{
    infidelity, overlap, randomization_test, DocAttributions, TestKind,
};
use crate::model::{
    accuracy, init_model, randomize_head, train, Architecture, Classifier, TextClassifier, TrainReport,
};
use crate::util::derive_seed;

use super::config::ExperimentConfig;
use super::highlight::export_highlights;
use super::report::{
    emit_report, AccuracyRow, AgreementRow, EvaluationResults, InfidelityRow, OverlapRow, RobustnessEntry,
};
use super::synth::synth_dataset;

pub const STALE_MARKER: &str = "STALE";

/// The three models of the randomization tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    D1,
    D2,
    R,
}

impl ModelTag {
    pub const ALL: [ModelTag; 3] = [ModelTag::D1, ModelTag::D2, ModelTag::R];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::D1 => "d1",
            ModelTag::D2 => "d2",
            ModelTag::R => "r",
        }
    }
}

/// Paths inside an experiment's output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutputLayout { root: root.into() }
    }

    pub fn config_snapshot(&self) -> PathBuf {
        self.root.join("config.toml")
    }
    pub fn stale_marker(&self) -> PathBuf {
        self.root.join(STALE_MARKER)
    }
    pub fn checkpoints(&self) -> PathBuf {
        self.root.join("checkpoints")
    }
    pub fn checkpoint(&self, tag: ModelTag) -> PathBuf {
        self.checkpoints().join(format!("{}.json", tag.as_str()))
    }
    pub fn train_report(&self, tag: ModelTag) -> PathBuf {
        self.checkpoints().join(format!("train_{}.json", tag.as_str()))
    }
    pub fn vocab(&self) -> PathBuf {
        self.checkpoints().join("vocab.json")
    }
    pub fn attributions(&self) -> PathBuf {
        self.root.join("attributions")
    }
    pub fn attribution_file(&self, key: &AttributionKey) -> PathBuf {
        self.attributions().join(format!("run{}", key.run)).join(format!(
            "{}_{}_{}.jsonl",
            key.model.as_str(),
            key.method,
            key.granularity
        ))
    }
    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }
    pub fn highlights(&self) -> PathBuf {
        self.root.join("highlights")
    }
}

/// Identifies one attribution file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AttributionKey {
    pub model: ModelTag,
    pub method: Method,
    pub granularity: Granularity,
    pub run: usize,
}

impl AttributionKey {
    pub fn new(model: ModelTag, method: Method, granularity: Granularity, run: usize) -> Self {
        AttributionKey {
            model,
            method,
            granularity,
            run,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModels {
    pub d1: TextClassifier,
    pub d2: TextClassifier,
    pub r: TextClassifier,
    pub reports: Option<(TrainReport, TrainReport)>,
}

impl TrainedModels {
    pub fn get(&self, tag: ModelTag) -> &TextClassifier {
        match tag {
            ModelTag::D1 => &self.d1,
            ModelTag::D2 => &self.d2,
            ModelTag::R => &self.r,
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs `body` as pipeline stage `stage`. A STALE marker naming the stage is
/// left behind if it fails.
pub fn run_stage<T>(layout: &OutputLayout, stage: &'static str, body: impl FnOnce() -> Result<T>) -> Result<T> {
    let marker = layout.stale_marker();
    write_file(&marker, format!("stage {stage} in progress\n").as_bytes())?;
    match body() {
        Ok(v) => {
            fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
            Ok(v)
        }
        Err(e) => {
            let e = e.in_stage(stage);
            // best effort: the original error matters more than the marker
            let _ = fs::write(&marker, format!("{e}\n"));
            Err(e)
        }
    }
}

/// Builds the configured dataset (file-backed or synthetic).
pub fn load_data(config: &ExperimentConfig) -> Result<Dataset> {
    let options = config.data.corpus_options();
    let split = config.data.split_config();
    match (&config.data.path, &config.synthetic) {
        (Some(path), _) => load_dataset(path, config.data.resolved_format()?, split, config.seeds.split, &options),
        (None, Some(spec)) => synth_dataset(spec, split, config.seeds.split, &options),
        (None, None) => Err(Error::Config("no dataset configured".into())),
    }
}

pub fn architecture(config: &ExperimentConfig, dataset: &Dataset) -> Architecture {
    Architecture {
        vocab_size: dataset.vocab.len(),
        embed_dim: config.model.embed_dim,
        hidden: config.model.hidden,
        classes: dataset.num_classes,
    }
}

/// Trains D1 and D2 on identical data and batch order from different
/// initializations, then derives R by re-drawing D1's head. Writes the
/// checkpoints, vocabulary and training reports.
pub fn train_models(config: &ExperimentConfig, dataset: &Dataset, layout: &OutputLayout) -> Result<TrainedModels> {
    let arch = architecture(config, dataset);
    let mut train_cfg = config.train.clone();
    train_cfg.seed = config.seeds.train;
    let fit = |seed: u64| -> Result<(TextClassifier, TrainReport)> {
        let init = init_model(arch, seed)?;
        train(&init, dataset, &train_cfg)
    };
    let (first, second) = rayon::join(|| fit(config.seeds.init_d1), || fit(config.seeds.init_d2));
    let (d1, report1) = first?;
    let (d2, report2) = second?;
    let r = randomize_head(&d1, config.seeds.head_r);

    let dir = layout.checkpoints();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    dataset.vocab.save(&layout.vocab())?;
    for (tag, model) in [(ModelTag::D1, &d1), (ModelTag::D2, &d2), (ModelTag::R, &r)] {
        let path = layout.checkpoint(tag);
        write_file(&path, model.to_json()?.as_bytes())?;
    }
    for (tag, report) in [(ModelTag::D1, &report1), (ModelTag::D2, &report2)] {
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        write_file(&layout.train_report(tag), text.as_bytes())?;
    }
    Ok(TrainedModels {
        d1,
        d2,
        r,
        reports: Some((report1, report2)),
    })
}

/// Loads the checkpoints written by [`train_models`] and checks them against
/// the dataset's vocabulary.
pub fn load_models(layout: &OutputLayout, dataset: &Dataset) -> Result<TrainedModels> {
    let vocab = Vocab::load(&layout.vocab())?;
    if vocab != dataset.vocab {
        return Err(Error::Mismatch(
            "saved vocabulary differs from the one rebuilt from the config".into(),
        ));
    }
    let load = |tag| TextClassifier::load(&layout.checkpoint(tag));
    let read_report = |tag| -> Result<TrainReport> {
        let path = layout.train_report(tag);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    };
    Ok(TrainedModels {
        d1: load(ModelTag::D1)?,
        d2: load(ModelTag::D2)?,
        r: load(ModelTag::R)?,
        reports: Some((read_report(ModelTag::D1)?, read_report(ModelTag::D2)?)),
    })
}

/// Indices (into `dataset.documents`) of the test documents to attribute:
/// test documents with at least two sentences, subsampled without
/// replacement to `sample_size` when there are more, kept in corpus order.
pub fn sample_documents(config: &ExperimentConfig, dataset: &Dataset) -> Vec<usize> {
    let eligible: Vec<usize> = dataset
        .documents
        .iter()
        .zip(&dataset.splits)
        .enumerate()
        .filter(|(_, (d, s))| **s == Split::Test && d.admissible())
        .map(|(i, _)| i)
        .collect();
    let n = config.attribution.sample_size;
    if eligible.len() <= n {
        return eligible;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seeds.split, 0));
    let mut picked: Vec<usize> = index::sample(&mut rng, eligible.len(), n)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Every attribution of one document under one model and run.
struct DocResult {
    items: Vec<(Method, Granularity, Attribution)>,
}

fn attribute_document(
    config: &ExperimentConfig,
    model: &TextClassifier,
    doc: &Document,
    seed: u64,
    with_ig: bool,
) -> Result<DocResult> {
    let methods = &config.attribution.methods;
    let budget = |m: usize| config.attribution.budget.unwrap_or_else(|| default_budget(m));
    let sentences = make_partition(doc, Granularity::Sentence)?;
    let tokens = Partition::tokens(doc.len())?;
    let mut items = Vec::new();
    if config.attribution.wants_shap() {
        let token_shap = kernel_shap(model, doc, &tokens, budget(tokens.len()), seed)?;
        if methods.contains(&Method::ShapDirect) {
            let direct = kernel_shap(model, doc, &sentences, budget(sentences.len()), seed)?;
            items.push((Method::ShapDirect, Granularity::Sentence, direct));
        }
        if methods.contains(&Method::ShapIndirect) {
            let indirect = aggregate_indirect(&token_shap, &sentences)?;
            items.push((Method::ShapIndirect, Granularity::Sentence, indirect));
        }
        items.push((Method::ShapDirect, Granularity::Token, token_shap));
    }
    if with_ig && config.attribution.wants_ig() {
        let ig = integrated_gradients(model, doc, config.attribution.ig_steps)?;
        if methods.contains(&Method::IgIndirect) {
            let indirect = aggregate_indirect(&ig, &sentences)?;
            items.push((Method::IgIndirect, Granularity::Sentence, indirect));
        }
        items.push((Method::Ig, Granularity::Token, ig));
    }
    Ok(DocResult { items })
}

fn write_jsonl(path: &Path, attributions: &[Attribution]) -> Result<()> {
    let mut buf = Vec::new();
    for a in attributions {
        serde_json::to_writer(&mut buf, &a.to_record())?;
        buf.push(b'\n');
    }
    write_file(path, &buf)
}

/// Computes attributions for the sampled documents and writes one JSONL file
/// per (run, model, method, granularity). Run 0 covers all three models;
/// runs 1.. (overlap) cover D1 with the sampling-based methods only.
/// Per-document seeds are `derive_seed(run seed, document index)`, shared
/// across models.
pub fn attribute_documents(
    config: &ExperimentConfig,
    dataset: &Dataset,
    models: &TrainedModels,
    layout: &OutputLayout,
) -> Result<Vec<AttributionKey>> {
    let sample = sample_documents(config, dataset);
    if sample.is_empty() {
        return Err(Error::InvalidInput(
            "no test document has at least two sentences".into(),
        ));
    }
    let mut jobs: Vec<(usize, ModelTag)> = ModelTag::ALL.iter().map(|&t| (0, t)).collect();
    if config.attribution.overlap_runs >= 2 && config.attribution.wants_shap() {
        jobs.extend((1..config.attribution.overlap_runs).map(|run| (run, ModelTag::D1)));
    }
    let mut written = Vec::new();
    for (run, tag) in jobs {
        let master = config.seeds.attribution[run];
        let model = models.get(tag);
        let results: Vec<DocResult> = sample
            .par_iter()
            .map(|&i| attribute_document(config, model, &dataset.documents[i], derive_seed(master, i as u64), run == 0))
            .collect::<Result<_>>()?;
        let mut grouped: Vec<(Method, Granularity, Vec<Attribution>)> = Vec::new();
        for doc in results {
            for (method, granularity, a) in doc.items {
                match grouped.iter_mut().find(|g| g.0 == method && g.1 == granularity) {
                    Some(g) => g.2.push(a),
                    None => grouped.push((method, granularity, vec![a])),
                }
            }
        }
        for (method, granularity, attributions) in grouped {
            let key = AttributionKey::new(tag, method, granularity, run);
            write_jsonl(&layout.attribution_file(&key), &attributions)?;
            written.push(key);
        }
    }
    Ok(written)
}

/// Reads an attribution file back, resolving each record's document.
pub fn read_attributions(path: &Path, dataset: &Dataset) -> Result<Vec<Attribution>> {
    let by_id: HashMap<&str, &Document> = dataset.documents.iter().map(|d| (d.id.as_str(), d)).collect();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AttributionRecord = serde_json::from_str(&line).map_err(|e| Error::Schema {
            line: n + 1,
            message: e.to_string(),
        })?;
        let doc = by_id.get(record.doc_id.as_str()).ok_or_else(|| Error::Schema {
            line: n + 1,
            message: format!("unknown document {}", record.doc_id),
        })?;
        out.push(record.into_attribution(doc)?);
    }
    Ok(out)
}

fn predictions(model: &TextClassifier, docs: &[&Document]) -> Result<Vec<usize>> {
    docs.par_iter().map(|d| Ok(model.predict(&d.tokens)?.class)).collect()
}

fn agreement_row(pair: &str, a: &[usize], b: &[usize]) -> AgreementRow {
    let common = a.iter().zip(b).filter(|(x, y)| x == y).count();
    AgreementRow {
        pair: pair.to_string(),
        documents: a.len(),
        common_predictions: common,
        percent: 100.0 * common as f64 / a.len().max(1) as f64,
    }
}

/// Computes every metric from the models and the attribution files on disk.
pub fn evaluate(
    config: &ExperimentConfig,
    dataset: &Dataset,
    models: &TrainedModels,
    layout: &OutputLayout,
) -> Result<EvaluationResults> {
    let k = config.evaluation.k_percent;
    let test_docs: Vec<&Document> = dataset.split(Split::Test).collect();
    if test_docs.is_empty() {
        return Err(Error::InvalidInput("test split is empty".into()));
    }

    let mut accuracy_rows = Vec::new();
    for tag in ModelTag::ALL {
        let model = models.get(tag);
        let report = match (tag, &models.reports) {
            (ModelTag::D1, Some((r, _))) => Some(r),
            (ModelTag::D2, Some((_, r))) => Some(r),
            _ => None,
        };
        accuracy_rows.push(AccuracyRow {
            model: tag.as_str().into(),
            selected_learning_rate: report.map(|r| r.selected_learning_rate),
            stopping_epoch: report.map(|r| r.stopping_epoch),
            best_validation_accuracy: report.map(|r| r.best_validation_accuracy),
            test_accuracy: accuracy(model, test_docs.iter().copied()),
        });
    }
    let p1 = predictions(&models.d1, &test_docs)?;
    let p2 = predictions(&models.d2, &test_docs)?;
    let pr = predictions(&models.r, &test_docs)?;
    let agreement = vec![agreement_row("d1-d2", &p1, &p2), agreement_row("d1-r", &p1, &pr)];

    let load = |key: AttributionKey| -> Result<Option<Vec<Attribution>>> {
        let path = layout.attribution_file(&key);
        if !path.exists() {
            return Ok(None);
        }
        read_attributions(&path, dataset).map(Some)
    };

    let mut pairs: Vec<(Method, Method, Granularity)> = Vec::new();
    let methods = &config.attribution.methods;
    for (sentence_method, token_method) in [
        (Method::ShapDirect, Method::ShapDirect),
        (Method::ShapIndirect, Method::ShapDirect),
        (Method::IgIndirect, Method::Ig),
    ] {
        if methods.contains(&sentence_method) {
            pairs.push((sentence_method, token_method, Granularity::Token));
        }
    }

    let mut robustness = Vec::new();
    for &(sentence_method, token_method, _) in &pairs {
        let mut per_model: HashMap<ModelTag, Vec<DocAttributions>> = HashMap::new();
        for tag in ModelTag::ALL {
            let key_t = AttributionKey::new(tag, token_method, Granularity::Token, 0);
            let key_s = AttributionKey::new(tag, sentence_method, Granularity::Sentence, 0);
            let missing = || Error::InvalidInput(format!("missing attribution file {}", layout.attribution_file(&key_t).display()));
            let token = load(key_t)?.ok_or_else(missing)?;
            let sentence = load(key_s)?.ok_or_else(|| {
                Error::InvalidInput(format!("missing attribution file {}", layout.attribution_file(&key_s).display()))
            })?;
            per_model.insert(
                tag,
                token
                    .into_iter()
                    .zip(sentence)
                    .map(|(token, sentence)| DocAttributions { token, sentence })
                    .collect(),
            );
        }
        for (kind, other) in [(TestKind::DiffInit, ModelTag::D2), (TestKind::Untrained, ModelTag::R)] {
            let report = randomization_test(kind, &per_model[&ModelTag::D1], &per_model[&other], k)?;
            robustness.push(RobustnessEntry {
                method: sentence_method,
                report,
            });
        }
    }

    let mut overlap_rows = Vec::new();
    let runs = config.attribution.overlap_runs;
    if runs >= 2 {
        let mut targets = vec![(Method::ShapDirect, Granularity::Token)];
        if methods.contains(&Method::ShapDirect) {
            targets.push((Method::ShapDirect, Granularity::Sentence));
        }
        if methods.contains(&Method::ShapIndirect) {
            targets.push((Method::ShapIndirect, Granularity::Sentence));
        }
        for (method, granularity) in targets {
            let mut all_runs = Vec::with_capacity(runs);
            for run in 0..runs {
                match load(AttributionKey::new(ModelTag::D1, method, granularity, run))? {
                    Some(a) => all_runs.push(a),
                    None => break,
                }
            }
            if all_runs.len() < runs {
                continue;
            }
            let n_docs = all_runs[0].len();
            let per_document = (0..n_docs)
                .map(|d| {
                    let doc_runs: Vec<Attribution> = all_runs.iter().map(|r| r[d].clone()).collect();
                    Ok((doc_runs[0].doc_id.clone(), overlap(&doc_runs, k)?))
                })
                .collect::<Result<Vec<_>>>()?;
            overlap_rows.push(OverlapRow {
                method,
                granularity,
                runs,
                per_document,
            });
        }
    }

    let by_id: HashMap<&str, &Document> = dataset.documents.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut infidelity_rows = Vec::new();
    for (method, granularity) in [
        (Method::ShapDirect, Granularity::Token),
        (Method::ShapDirect, Granularity::Sentence),
        (Method::ShapIndirect, Granularity::Sentence),
        (Method::Ig, Granularity::Token),
        (Method::IgIndirect, Granularity::Sentence),
    ] {
        let Some(attributions) = load(AttributionKey::new(ModelTag::D1, method, granularity, 0))? else {
            continue;
        };
        let per_document = attributions
            .par_iter()
            .map(|a| Ok((a.doc_id.clone(), infidelity(&models.d1, by_id[a.doc_id.as_str()], a)?)))
            .collect::<Result<Vec<_>>>()?;
        infidelity_rows.push(InfidelityRow {
            method,
            granularity,
            per_document,
        });
    }

    Ok(EvaluationResults {
        dataset: config.name.clone(),
        k_percent: k,
        accuracy: accuracy_rows,
        agreement,
        robustness,
        overlap: overlap_rows,
        infidelity: infidelity_rows,
    })
}

/// Writes highlight pages for the first `highlight_docs` sampled documents
/// from D1's run-0 attributions.
pub fn write_highlights(
    config: &ExperimentConfig,
    dataset: &Dataset,
    layout: &OutputLayout,
) -> Result<Vec<PathBuf>> {
    let by_id: HashMap<&str, &Document> = dataset.documents.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut written = Vec::new();
    for (method, granularity) in [
        (Method::ShapDirect, Granularity::Sentence),
        (Method::ShapDirect, Granularity::Token),
        (Method::Ig, Granularity::Token),
    ] {
        let path = layout.attribution_file(&AttributionKey::new(ModelTag::D1, method, granularity, 0));
        if !path.exists() {
            continue;
        }
        let attributions = read_attributions(&path, dataset)?;
        for a in attributions.iter().take(config.evaluation.highlight_docs) {
            let page = export_highlights(by_id[a.doc_id.as_str()], a, config.evaluation.highlight_budget)?;
            let out = layout
                .highlights()
                .join(format!("{}_{}_{}.html", a.doc_id, method, granularity));
            write_file(&out, page.html.as_bytes())?;
            written.push(out);
        }
    }
    Ok(written)
}

/// Summary of a full pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub layout: OutputLayout,
    pub results: EvaluationResults,
    pub report_files: Vec<PathBuf>,
    pub highlight_files: Vec<PathBuf>,
}

fn snapshot_config(config: &ExperimentConfig, layout: &OutputLayout) -> Result<()> {
    fs::create_dir_all(&layout.root).map_err(|e| Error::io(&layout.root, e))?;
    let mut f = fs::File::create(layout.config_snapshot()).map_err(|e| Error::io(layout.config_snapshot(), e))?;
    f.write_all(config.to_toml().as_bytes())
        .map_err(|e| Error::io(layout.config_snapshot(), e))
}

/// Validates the config and runs every stage: data, train, attribute,
/// evaluate, report, highlight.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let layout = OutputLayout::new(&config.output_dir);
    snapshot_config(config, &layout)?;
    let dataset = run_stage(&layout, "data", || load_data(config))?;
    let models = run_stage(&layout, "train", || train_models(config, &dataset, &layout))?;
    run_stage(&layout, "attribute", || attribute_documents(config, &dataset, &models, &layout))?;
    let results = run_stage(&layout, "evaluate", || evaluate(config, &dataset, &models, &layout))?;
    let report_files = run_stage(&layout, "report", || emit_report(&results, &layout.reports()))?;
    let highlight_files = run_stage(&layout, "highlight", || write_highlights(config, &dataset, &layout))?;
    Ok(ExperimentOutcome {
        layout,
        results,
        report_files,
        highlight_files,
    })
}
