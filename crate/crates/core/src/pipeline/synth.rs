use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusOptions, Dataset, LabelValue, RawRecord, Sentencizer, SplitConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalMode {
    /// One sentence per document carries the class keywords.
    SentenceLevel,
    /// Class keywords are scattered over random positions in the document.
    TokenLevel,
}

/// Parameters of the synthetic corpus generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub documents: usize,
    pub classes: usize,
    pub sentences_min: usize,
    pub sentences_max: usize,
    pub words_min: usize,
    pub words_max: usize,
    pub mode: SignalMode,
    /// Probability that a label is replaced by a different class.
    pub noise: f64,
    /// Number of filler words.
    pub vocab_size: usize,
    pub keywords_per_class: usize,
    /// Keywords planted per document.
    pub planted_keywords: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            documents: 2000,
            classes: 2,
            sentences_min: 4,
            sentences_max: 8,
            words_min: 6,
            words_max: 14,
            mode: SignalMode::SentenceLevel,
            noise: 0.05,
            vocab_size: 500,
            keywords_per_class: 10,
            planted_keywords: 3,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("documents", self.documents),
            ("classes", self.classes),
            ("sentences_min", self.sentences_min),
            ("words_min", self.words_min),
            ("vocab_size", self.vocab_size),
            ("keywords_per_class", self.keywords_per_class),
            ("planted_keywords", self.planted_keywords),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("synthetic.{name} must be positive")));
        }
        if self.classes < 2 {
            return Err(Error::Config("synthetic.classes must be at least 2".into()));
        }
        if self.sentences_max < self.sentences_min || self.words_max < self.words_min {
            return Err(Error::Config("synthetic ranges need min <= max".into()));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::Config(format!("synthetic.noise {} is outside [0, 1)", self.noise)));
        }
        if self.mode == SignalMode::SentenceLevel && self.planted_keywords > self.words_min {
            return Err(Error::Config(
                "synthetic.planted_keywords exceeds the shortest sentence".into(),
            ));
        }
        if self.mode == SignalMode::TokenLevel && self.planted_keywords > self.sentences_min * self.words_min {
            return Err(Error::Config("synthetic.planted_keywords exceeds the shortest document".into()));
        }
        Ok(())
    }
}

/// A generated corpus: raw records plus the clean label of each document
/// before noise was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<RawRecord>,
    pub clean_labels: Vec<usize>,
    pub keywords: Vec<Vec<String>>,
}

impl SyntheticCorpus {
    pub fn flipped(&self) -> usize {
        self.records
            .iter()
            .zip(&self.clean_labels)
            .filter(|(r, &c)| r.label != LabelValue::Int(c as i64))
            .count()
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// `count` distinct pronounceable pseudo-words of 3 syllables, none of which
/// the sentencizer treats as an abbreviation.
fn pseudo_words(count: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let sentencizer = Sentencizer::default();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut w = String::with_capacity(6);
        for _ in 0..3 {
            w.push(*CONSONANTS.choose(rng).unwrap() as char);
            w.push(*VOWELS.choose(rng).unwrap() as char);
        }
        if !sentencizer.is_abbreviation(&w) && seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn render_sentence(words: &[&str]) -> String {
    let mut s = words.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s.push('.');
    s
}

/// Generates the raw corpus for `spec`; deterministic in `spec.seed`.
pub fn synth_records(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lexicon = pseudo_words(spec.vocab_size + spec.classes * spec.keywords_per_class, &mut rng);
    let (keyword_pool, filler) = lexicon.split_at(spec.classes * spec.keywords_per_class);
    let keywords: Vec<Vec<String>> = keyword_pool
        .chunks(spec.keywords_per_class)
        .map(<[String]>::to_vec)
        .collect();

    let mut records = Vec::with_capacity(spec.documents);
    let mut clean_labels = Vec::with_capacity(spec.documents);
    for i in 0..spec.documents {
        let clean = rng.gen_range(0..spec.classes);
        let n_sent = rng.gen_range(spec.sentences_min..=spec.sentences_max);
        let mut sentences: Vec<Vec<&str>> = (0..n_sent)
            .map(|_| {
                let n = rng.gen_range(spec.words_min..=spec.words_max);
                (0..n).map(|_| filler.choose(&mut rng).unwrap().as_str()).collect()
            })
            .collect();
        let class_words = &keywords[clean];
        match spec.mode {
            SignalMode::SentenceLevel => {
                let target = rng.gen_range(0..n_sent);
                let len = sentences[target].len();
                for pos in index::sample(&mut rng, len, spec.planted_keywords) {
                    sentences[target][pos] = class_words.choose(&mut rng).unwrap();
                }
            }
            SignalMode::TokenLevel => {
                let slots: Vec<(usize, usize)> = sentences
                    .iter()
                    .enumerate()
                    .flat_map(|(s, words)| (0..words.len()).map(move |w| (s, w)))
                    .collect();
                for k in index::sample(&mut rng, slots.len(), spec.planted_keywords) {
                    let (s, w) = slots[k];
                    sentences[s][w] = class_words.choose(&mut rng).unwrap();
                }
            }
        }
        let label = if rng.gen_bool(spec.noise) {
            let other = rng.gen_range(0..spec.classes - 1);
            if other >= clean {
                other + 1
            } else {
                other
            }
        } else {
            clean
        };
        let text = sentences
            .iter()
            .map(|s| render_sentence(s))
            .collect::<Vec<_>>()
            .join(" ");
        records.push(RawRecord {
            id: Some(format!("syn-{i:05}")),
            text,
            label: LabelValue::Int(label as i64),
            line: i + 1,
        });
        clean_labels.push(clean);
    }
    Ok(SyntheticCorpus {
        records,
        clean_labels,
        keywords,
    })
}

/// Generates a corpus and splits it like a file-backed dataset.
pub fn synth_dataset(
    spec: &SyntheticSpec,
    split_config: SplitConfig,
    split_seed: u64,
    options: &CorpusOptions,
) -> Result<Dataset> {
    let corpus = synth_records(spec)?;
    Dataset::from_records(corpus.records, split_config, split_seed, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{split_pieces, TokenizerConfig};

    fn small(mode: SignalMode, noise: f64) -> SyntheticSpec {
        SyntheticSpec {
            documents: 400,
            mode,
            noise,
            seed: 9,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn deterministic() {
        let spec = small(SignalMode::SentenceLevel, 0.05);
        assert_eq!(synth_records(&spec).unwrap(), synth_records(&spec).unwrap());
        let other = SyntheticSpec { seed: 10, ..spec.clone() };
        assert_ne!(synth_records(&spec).unwrap(), synth_records(&other).unwrap());
    }

    #[test]
    fn noise_rate_matches() {
        let spec = SyntheticSpec {
            documents: 4000,
            ..small(SignalMode::SentenceLevel, 0.1)
        };
        let corpus = synth_records(&spec).unwrap();
        let rate = corpus.flipped() as f64 / spec.documents as f64;
        assert!((rate - 0.1).abs() < 0.015, "flip rate {rate}");
        let clean = synth_records(&SyntheticSpec { noise: 0.0, ..spec }).unwrap();
        assert_eq!(clean.flipped(), 0);
    }

    /// A keyword-count rule separates the classes perfectly without noise.
    #[test]
    fn separable_without_noise() {
        for mode in [SignalMode::SentenceLevel, SignalMode::TokenLevel] {
            let corpus = synth_records(&small(mode, 0.0)).unwrap();
            for r in &corpus.records {
                let pieces = split_pieces(&r.text, TokenizerConfig::default()).unwrap();
                let counts: Vec<usize> = corpus
                    .keywords
                    .iter()
                    .map(|kw| pieces.pieces.iter().filter(|p| kw.contains(p)).count())
                    .collect();
                let best = (0..counts.len()).max_by_key(|&c| (counts[c], usize::MAX - c)).unwrap();
                assert_eq!(r.label, LabelValue::Int(best as i64));
            }
        }
    }

    #[test]
    fn sentence_count_within_range() {
        let spec = small(SignalMode::SentenceLevel, 0.0);
        let ds = synth_dataset(&spec, SplitConfig::default(), 1, &CorpusOptions::default()).unwrap();
        for d in &ds.documents {
            assert!((spec.sentences_min..=spec.sentences_max).contains(&d.num_sentences()), "{}", d.raw_text);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(SyntheticSpec { noise: 1.0, ..SyntheticSpec::default() }.validate().is_err());
        assert!(SyntheticSpec { documents: 0, ..SyntheticSpec::default() }.validate().is_err());
        assert!(SyntheticSpec { classes: 1, ..SyntheticSpec::default() }.validate().is_err());
    }
}
