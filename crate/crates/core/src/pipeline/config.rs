use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attribution::{Method, DEFAULT_IG_STEPS};
use crate::corpus::{CorpusOptions, DatasetFormat, SplitConfig, TokenizerConfig};
use crate::error::{Error, Result};
use crate::evaluation::DEFAULT_K_PERCENT;
use crate::model::TrainConfig;

use super::synth::SyntheticSpec;

/// Where documents come from: a JSONL/CSV file or a synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub format: Option<DatasetFormat>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default = "default_min_freq")]
    pub min_freq: usize,
    #[serde(default = "default_max_vocab")]
    pub max_vocab: usize,
    pub subword_chunk: Option<usize>,
    pub abbreviations: Option<PathBuf>,
}

fn default_test_fraction() -> f64 {
    SplitConfig::default().test_fraction
}
fn default_validation_fraction() -> f64 {
    SplitConfig::default().validation_fraction
}
fn default_min_freq() -> usize {
    1
}
fn default_max_vocab() -> usize {
    50_000
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: None,
            format: None,
            test_fraction: default_test_fraction(),
            validation_fraction: default_validation_fraction(),
            min_freq: default_min_freq(),
            max_vocab: default_max_vocab(),
            subword_chunk: None,
            abbreviations: None,
        }
    }
}

impl DataConfig {
    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            test_fraction: self.test_fraction,
            validation_fraction: self.validation_fraction,
        }
    }

    pub fn corpus_options(&self) -> CorpusOptions {
        CorpusOptions {
            tokenizer: TokenizerConfig {
                subword_chunk: self.subword_chunk,
            },
            min_freq: self.min_freq,
            max_vocab: self.max_vocab,
            abbreviations: self.abbreviations.clone(),
        }
    }

    /// Explicit format, else guessed from the file extension.
    pub fn resolved_format(&self) -> Result<DatasetFormat> {
        if let Some(f) = self.format {
            return Ok(f);
        }
        let path = self.path.as_deref().unwrap_or(Path::new(""));
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(DatasetFormat::Csv),
            Some("jsonl") | Some("json") => Ok(DatasetFormat::Jsonl),
            _ => Err(Error::Config(format!(
                "cannot infer the format of {}; set data.format",
                path.display()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
}

fn default_embed_dim() -> usize {
    32
}
fn default_hidden() -> usize {
    64
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: default_embed_dim(),
            hidden: default_hidden(),
        }
    }
}

/// Every seed the pipeline consumes. None has a default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub split: u64,
    /// Batch order, shared by D1 and D2.
    pub train: u64,
    pub init_d1: u64,
    pub init_d2: u64,
    pub head_r: u64,
    /// One master seed per attribution run. The first drives the robustness
    /// tests; the first `overlap_runs` drive the overlap table.
    pub attribution: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributionConfig {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Coalition budget; 2M + 2048 per document when absent.
    pub budget: Option<usize>,
    #[serde(default = "default_ig_steps")]
    pub ig_steps: usize,
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
    #[serde(default = "default_overlap_runs")]
    pub overlap_runs: usize,
}

fn default_methods() -> Vec<Method> {
    vec![Method::ShapDirect, Method::ShapIndirect, Method::Ig, Method::IgIndirect]
}
fn default_ig_steps() -> usize {
    DEFAULT_IG_STEPS
}
fn default_sample_size() -> usize {
    1000
}
fn default_overlap_runs() -> usize {
    10
}

impl Default for AttributionConfig {
    fn default() -> Self {
        AttributionConfig {
            methods: default_methods(),
            budget: None,
            ig_steps: default_ig_steps(),
            sample_size: default_sample_size(),
            overlap_runs: default_overlap_runs(),
        }
    }
}

impl AttributionConfig {
    pub fn wants_shap(&self) -> bool {
        self.methods
            .iter()
            .any(|m| matches!(m, Method::ShapDirect | Method::ShapIndirect))
    }

    pub fn wants_ig(&self) -> bool {
        self.methods.iter().any(|m| matches!(m, Method::Ig | Method::IgIndirect))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    #[serde(default = "default_k")]
    pub k_percent: f64,
    #[serde(default = "default_highlight_budget")]
    pub highlight_budget: f64,
    #[serde(default = "default_highlight_docs")]
    pub highlight_docs: usize,
}

fn default_k() -> f64 {
    DEFAULT_K_PERCENT
}
fn default_highlight_budget() -> f64 {
    10.0
}
fn default_highlight_docs() -> usize {
    20
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            k_percent: default_k(),
            highlight_budget: default_highlight_budget(),
            highlight_docs: default_highlight_docs(),
        }
    }
}

/// Full experiment description, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used in table rows.
    #[serde(default = "default_name")]
    pub name: String,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data: DataConfig,
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    pub seeds: SeedConfig,
    #[serde(default)]
    pub attribution: AttributionConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

fn default_name() -> String {
    "experiment".into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Applies `section.key=value` overrides on top of the file contents.
    /// Values are parsed as TOML, falling back to a bare string.
    pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table: toml::Table = toml::from_str(&text)?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.seeds;
        if s.init_d1 == s.init_d2 {
            return Err(Error::Config(format!(
                "seeds.init_d1 and seeds.init_d2 must differ (both are {})",
                s.init_d1
            )));
        }
        if s.attribution.is_empty() {
            return Err(Error::Config("seeds.attribution needs at least one seed".into()));
        }
        match (&self.data.path, &self.synthetic) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set either data.path or [synthetic], not both".into()))
            }
            (None, None) => return Err(Error::Config("no dataset: set data.path or [synthetic]".into())),
            (Some(_), None) => {
                self.data.resolved_format()?;
            }
            (None, Some(spec)) => spec.validate()?,
        }
        self.train.validate()?;
        if self.model.embed_dim == 0 || self.model.hidden == 0 {
            return Err(Error::Config("model.embed_dim and model.hidden must be positive".into()));
        }
        let a = &self.attribution;
        if a.methods.is_empty() {
            return Err(Error::Config("attribution.methods is empty".into()));
        }
        if a.methods.contains(&Method::ExactShapley) {
            return Err(Error::Config(
                "exact_shapley is a test oracle and cannot be run by the pipeline".into(),
            ));
        }
        if a.sample_size == 0 {
            return Err(Error::Config("attribution.sample_size must be at least 1".into()));
        }
        if a.ig_steps == 0 {
            return Err(Error::Config("attribution.ig_steps must be positive".into()));
        }
        if a.overlap_runs == 1 {
            return Err(Error::Config("attribution.overlap_runs must be 0 (off) or at least 2".into()));
        }
        if a.overlap_runs > s.attribution.len() {
            return Err(Error::Config(format!(
                "attribution.overlap_runs is {} but seeds.attribution lists only {} seeds",
                a.overlap_runs,
                s.attribution.len()
            )));
        }
        let e = &self.evaluation;
        if !(e.k_percent > 0.0 && e.k_percent <= 100.0) {
            return Err(Error::Config("evaluation.k_percent must lie in (0, 100]".into()));
        }
        if !(e.highlight_budget > 0.0 && e.highlight_budget <= 100.0) {
            return Err(Error::Config("evaluation.highlight_budget must lie in (0, 100]".into()));
        }
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, sections) = parts.split_last().expect("split yields one part");
    let mut cursor = table;
    for section in sections {
        cursor = cursor
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {section} is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}
