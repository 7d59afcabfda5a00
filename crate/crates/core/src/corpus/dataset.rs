use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{split_pieces, Document, Pieces, Sentencizer, TokenizerConfig, Vocab};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Jsonl,
    Csv,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(DatasetFormat::Jsonl),
            "csv" => Ok(DatasetFormat::Csv),
            other => Err(Error::Config(format!("unknown dataset format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub validation_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.2,
            validation_fraction: 0.1,
        }
    }
}

impl SplitConfig {
    fn validate(&self) -> Result<()> {
        let ok = |f: f64| (0.0..1.0).contains(&f);
        if !ok(self.test_fraction) || !ok(self.validation_fraction) {
            return Err(Error::Config("split fractions must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// (train, validation, test) counts: test is floored, validation is the
    /// floor of its fraction of the remaining training part.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let test = (self.test_fraction * n as f64).floor() as usize;
        let train_all = n - test;
        let val = (self.validation_fraction * train_all as f64).floor() as usize;
        (train_all - val, val, test)
    }
}

/// Options controlling how raw text becomes documents.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusOptions {
    pub tokenizer: TokenizerConfig,
    pub min_freq: usize,
    pub max_vocab: usize,
    pub abbreviations: Option<PathBuf>,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            tokenizer: TokenizerConfig::default(),
            min_freq: 1,
            max_vocab: 50_000,
            abbreviations: None,
        }
    }
}

impl CorpusOptions {
    pub fn sentencizer(&self) -> Result<Sentencizer> {
        match &self.abbreviations {
            Some(p) => Sentencizer::from_file(p),
            None => Ok(Sentencizer::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelValue {
    Int(i64),
    Name(String),
}

/// One input record before tokenization. `line` is used in diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub id: Option<String>,
    pub text: String,
    pub label: LabelValue,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub documents: Vec<Document>,
    pub splits: Vec<Split>,
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub vocab: Vocab,
    pub split_seed: u64,
}

impl Dataset {
    /// Shuffles with `seed`, splits, builds the vocabulary from the training
    /// split only, then tokenizes everything against it.
    pub fn from_records(
        records: Vec<RawRecord>,
        split_config: SplitConfig,
        seed: u64,
        options: &CorpusOptions,
    ) -> Result<Self> {
        split_config.validate()?;
        if records.is_empty() {
            return Err(Error::InvalidInput("dataset has no records".into()));
        }
        let (labels, class_names) = resolve_labels(&records)?;
        let sentencizer = options.sentencizer()?;

        let mut pieces: Vec<Pieces> = Vec::with_capacity(records.len());
        for r in &records {
            let p = split_pieces(&r.text, options.tokenizer).map_err(|e| Error::Schema {
                line: r.line,
                message: e.to_string(),
            })?;
            pieces.push(p);
        }

        let n = records.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (n_train, n_val, _) = split_config.counts(n);
        let mut splits = vec![Split::Test; n];
        for (rank, &idx) in order.iter().enumerate() {
            splits[idx] = if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Validation
            } else {
                Split::Test
            };
        }
        if n_train == 0 {
            return Err(Error::InvalidInput("training split is empty".into()));
        }

        let vocab = Vocab::build(
            pieces
                .iter()
                .zip(&splits)
                .filter(|(_, s)| **s == Split::Train)
                .map(|(p, _)| p.pieces.as_slice()),
            options.min_freq,
            options.max_vocab,
        );

        let documents = records
            .into_iter()
            .zip(pieces)
            .zip(labels)
            .enumerate()
            .map(|(i, ((r, p), label))| {
                let id = r.id.unwrap_or_else(|| format!("doc-{i}"));
                Document::from_pieces(id, &r.text, label, p, &vocab, &sentencizer)
            })
            .collect();

        Ok(Dataset {
            documents,
            splits,
            num_classes: class_names.len(),
            class_names,
            vocab,
            split_seed: seed,
        })
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Document> + '_ {
        self.documents
            .iter()
            .zip(&self.splits)
            .filter(move |(_, s)| **s == split)
            .map(|(d, _)| d)
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.splits.iter().filter(|s| **s == split).count()
    }
}

fn resolve_labels(records: &[RawRecord]) -> Result<(Vec<usize>, Vec<String>)> {
    let all_int = matches!(records[0].label, LabelValue::Int(_));
    for r in records {
        if matches!(r.label, LabelValue::Int(_)) != all_int {
            return Err(Error::Schema {
                line: r.line,
                message: "labels mix integers and names".into(),
            });
        }
    }
    if all_int {
        let distinct: BTreeSet<i64> = records
            .iter()
            .map(|r| match r.label {
                LabelValue::Int(v) => v,
                LabelValue::Name(_) => unreachable!(),
            })
            .collect();
        let k = distinct.len() as i64;
        let mut labels = Vec::with_capacity(records.len());
        for r in records {
            let LabelValue::Int(v) = r.label else { unreachable!() };
            if !(0..k).contains(&v) {
                return Err(Error::Schema {
                    line: r.line,
                    message: format!("unknown label {v}: integer labels must form 0..{k}"),
                });
            }
            labels.push(v as usize);
        }
        Ok((labels, (0..k).map(|v| v.to_string()).collect()))
    } else {
        let names: Vec<String> = records
            .iter()
            .map(|r| match &r.label {
                LabelValue::Name(s) => s.clone(),
                LabelValue::Int(_) => unreachable!(),
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let labels = records
            .iter()
            .map(|r| match &r.label {
                LabelValue::Name(s) => names.binary_search(s).unwrap(),
                LabelValue::Int(_) => unreachable!(),
            })
            .collect();
        Ok((labels, names))
    }
}

fn label_from_json(v: &serde_json::Value, line: usize) -> Result<LabelValue> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(LabelValue::Int).ok_or_else(|| Error::Schema {
            line,
            message: format!("label {n} is not an integer"),
        }),
        serde_json::Value::String(s) => Ok(LabelValue::Name(s.clone())),
        other => Err(Error::Schema {
            line,
            message: format!("label must be a string or integer, got {other}"),
        }),
    }
}

fn label_from_str(s: &str) -> LabelValue {
    match s.trim().parse::<i64>() {
        Ok(v) => LabelValue::Int(v),
        Err(_) => LabelValue::Name(s.trim().to_string()),
    }
}

/// Reads JSONL (`{"id"?, "text", "label"}` per line) or CSV (header with
/// `text,label` and optional `id`) records.
pub fn read_records(path: &Path, format: DatasetFormat) -> Result<Vec<RawRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        DatasetFormat::Jsonl => {
            let mut out = Vec::new();
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line_no = i + 1;
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value =
                    serde_json::from_str(&line).map_err(|e| Error::Schema {
                        line: line_no,
                        message: format!("malformed record: {e}"),
                    })?;
                let field = |name: &str| {
                    value.get(name).ok_or_else(|| Error::Schema {
                        line: line_no,
                        message: format!("missing {name:?} field"),
                    })
                };
                let text = field("text")?
                    .as_str()
                    .ok_or_else(|| Error::Schema {
                        line: line_no,
                        message: "\"text\" must be a string".into(),
                    })?
                    .to_string();
                let label = label_from_json(field("label")?, line_no)?;
                let id = match value.get("id") {
                    None | Some(serde_json::Value::Null) => None,
                    Some(serde_json::Value::String(s)) => Some(s.clone()),
                    Some(other) => Some(other.to_string()),
                };
                out.push(RawRecord {
                    id,
                    text,
                    label,
                    line: line_no,
                });
            }
            Ok(out)
        }
        DatasetFormat::Csv => {
            let mut reader = csv::Reader::from_reader(file);
            let headers = reader.headers()?.clone();
            let col = |name: &str| headers.iter().position(|h| h.trim() == name);
            let (Some(text_col), Some(label_col)) = (col("text"), col("label")) else {
                return Err(Error::Schema {
                    line: 1,
                    message: "CSV header must contain text and label columns".into(),
                });
            };
            let id_col = col("id");
            let mut out = Vec::new();
            for row in reader.records() {
                let row = row.map_err(|e| Error::Schema {
                    line: e.position().map_or(0, |p| p.line() as usize),
                    message: format!("malformed record: {e}"),
                })?;
                let line = row.position().map_or(0, |p| p.line() as usize);
                let get = |c: usize, name: &str| {
                    row.get(c).ok_or_else(|| Error::Schema {
                        line,
                        message: format!("missing {name:?} field"),
                    })
                };
                out.push(RawRecord {
                    id: id_col.and_then(|c| row.get(c)).map(str::to_string),
                    text: get(text_col, "text")?.to_string(),
                    label: label_from_str(get(label_col, "label")?),
                    line,
                });
            }
            Ok(out)
        }
    }
}

pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    split_config: SplitConfig,
    seed: u64,
    options: &CorpusOptions,
) -> Result<Dataset> {
    let records = read_records(path, format)?;
    Dataset::from_records(records, split_config, seed, options)
}
