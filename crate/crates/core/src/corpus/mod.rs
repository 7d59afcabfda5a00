//! Text ingestion: tokenization with word alignment, sentence splitting,
//! meta-token partitions, vocabulary and dataset splits.

mod dataset;
mod partition;
mod sentencize;
mod tokenize;
mod vocab;

use std::ops::Range;

pub use dataset::{
    load_dataset, CorpusOptions, Dataset, DatasetFormat, LabelValue, RawRecord, Split,
    SplitConfig,
};
pub use partition::{make_partition, Granularity, Partition};
pub use sentencize::Sentencizer;
pub use tokenize::{split_pieces, tokenize, Pieces, Tokenized, TokenizerConfig};
pub use vocab::{TokenId, Vocab, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN};

use crate::error::{Error, Result};

/// Tokenized text with word alignment and sentence boundaries; the unit of attribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub tokens: Vec<TokenId>,
    pub pieces: Vec<String>,
    pub token_spans: Vec<Range<usize>>,
    pub word_of_token: Vec<usize>,
    pub sentence_boundaries: Vec<Range<usize>>,
    pub label: usize,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        text: &str,
        label: usize,
        vocab: &Vocab,
        tokenizer: TokenizerConfig,
        sentencizer: &Sentencizer,
    ) -> Result<Self> {
        let pieces = split_pieces(text, tokenizer)?;
        Ok(Self::from_pieces(id, text, label, pieces, vocab, sentencizer))
    }

    pub(crate) fn from_pieces(
        id: impl Into<String>,
        text: &str,
        label: usize,
        pieces: Pieces,
        vocab: &Vocab,
        sentencizer: &Sentencizer,
    ) -> Self {
        let sentence_boundaries = sentencizer.sentencize(text, &pieces);
        let tokens = pieces.pieces.iter().map(|p| vocab.id(p)).collect();
        Document {
            id: id.into(),
            raw_text: text.to_string(),
            tokens,
            pieces: pieces.pieces,
            token_spans: pieces.spans,
            word_of_token: pieces.word_of_token,
            sentence_boundaries,
            label,
        }
    }

    /// Builds a document straight from token ids, for callers that do their
    /// own tokenization. Pieces are rendered as `#<id>` and each token is its
    /// own word.
    pub fn from_token_ids(
        id: impl Into<String>,
        tokens: Vec<TokenId>,
        sentence_boundaries: Vec<Range<usize>>,
        label: usize,
    ) -> Result<Self> {
        let pieces: Vec<String> = tokens.iter().map(|t| format!("#{t}")).collect();
        let mut raw_text = String::new();
        let mut spans = Vec::with_capacity(pieces.len());
        for (i, p) in pieces.iter().enumerate() {
            if i > 0 {
                raw_text.push(' ');
            }
            spans.push(raw_text.len()..raw_text.len() + p.len());
            raw_text.push_str(p);
        }
        let doc = Document {
            id: id.into(),
            raw_text,
            word_of_token: (0..tokens.len()).collect(),
            tokens,
            pieces,
            token_spans: spans,
            sentence_boundaries,
            label,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn num_sentences(&self) -> usize {
        self.sentence_boundaries.len()
    }

    pub fn num_words(&self) -> usize {
        self.word_of_token.last().map_or(0, |w| w + 1)
    }

    /// Attribution needs at least two sentences; a single-feature ranking is degenerate.
    pub fn admissible(&self) -> bool {
        !self.is_empty() && self.num_sentences() >= 2
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.tokens.len();
        if t == 0 {
            return Err(Error::InvalidInput(format!("document {} has no tokens", self.id)));
        }
        if self.pieces.len() != t || self.token_spans.len() != t || self.word_of_token.len() != t
        {
            return Err(Error::Mismatch(format!(
                "document {}: token, piece, span and word arrays differ in length",
                self.id
            )));
        }
        if self.word_of_token[0] != 0
            || self
                .word_of_token
                .windows(2)
                .any(|w| w[1] != w[0] && w[1] != w[0] + 1)
        {
            return Err(Error::InvalidInput(format!(
                "document {}: word indices must start at 0 and be non-decreasing without gaps",
                self.id
            )));
        }
        Partition::new(Granularity::Sentence, self.sentence_boundaries.clone(), t)
            .map(|_| ())
            .map_err(|e| Error::InvalidInput(format!("document {}: sentences: {e}", self.id)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_from_text() {
        let vocab = Vocab::from_tokens(["good", "film", "bad", "plot", "."]);
        let doc = Document::new(
            "d",
            "Good film. Bad plot.",
            1,
            &vocab,
            TokenizerConfig::default(),
            &Sentencizer::default(),
        )
        .unwrap();
        assert_eq!(doc.len(), 6);
        assert_eq!(doc.sentence_boundaries, vec![0..3, 3..6]);
        assert!(doc.admissible());
        doc.validate().unwrap();
    }

    #[test]
    fn from_token_ids_validates() {
        assert!(Document::from_token_ids("x", vec![2, 3, 4], vec![0..2, 2..3], 0).is_ok());
        assert!(Document::from_token_ids("x", vec![2, 3, 4], vec![0..2], 0).is_err());
        assert!(Document::from_token_ids("x", vec![], vec![], 0).is_err());
    }
}
