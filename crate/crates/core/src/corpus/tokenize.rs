use std::ops::Range;

use crate::error::{Error, Result};

use super::vocab::{TokenId, Vocab};

/// Tokenizer settings. `subword_chunk` turns on fixed-size chunking of long
/// words so that several tokens share one word index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TokenizerConfig {
    pub subword_chunk: Option<usize>,
}

impl TokenizerConfig {
    pub fn subwords(chunk: usize) -> Self {
        Self {
            subword_chunk: Some(chunk.max(1)),
        }
    }
}

/// Surface-level tokenization of one text, before vocabulary lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pieces {
    pub pieces: Vec<String>,
    /// Byte range of each piece in the original text.
    pub spans: Vec<Range<usize>>,
    pub word_of_token: Vec<usize>,
}

impl Pieces {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Lowercases and splits on whitespace and punctuation. Every punctuation
/// character becomes its own token.
pub fn split_pieces(text: &str, config: TokenizerConfig) -> Result<Pieces> {
    let mut out = Pieces {
        pieces: Vec::new(),
        spans: Vec::new(),
        word_of_token: Vec::new(),
    };
    let mut word_start: Option<usize> = None;
    let mut word = 0usize;

    let flush = |start: usize, end: usize, out: &mut Pieces, word: &mut usize| {
        let lowered = text[start..end].to_lowercase();
        match config.subword_chunk {
            Some(chunk) if lowered.chars().count() > chunk => {
                // chunk on characters of the raw slice so spans stay aligned
                let raw: Vec<(usize, char)> = text[start..end].char_indices().collect();
                for part in raw.chunks(chunk) {
                    let lo = start + part[0].0;
                    let last = part[part.len() - 1];
                    let hi = start + last.0 + last.1.len_utf8();
                    out.pieces.push(text[lo..hi].to_lowercase());
                    out.spans.push(lo..hi);
                    out.word_of_token.push(*word);
                }
            }
            _ => {
                out.pieces.push(lowered);
                out.spans.push(start..end);
                out.word_of_token.push(*word);
            }
        }
        *word += 1;
    };

    for (i, c) in text.char_indices() {
        if c.is_whitespace() || is_punct(c) {
            if let Some(s) = word_start.take() {
                flush(s, i, &mut out, &mut word);
            }
            if is_punct(c) {
                let end = i + c.len_utf8();
                out.pieces.push(text[i..end].to_lowercase());
                out.spans.push(i..end);
                out.word_of_token.push(word);
                word += 1;
            }
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(s) = word_start {
        flush(s, text.len(), &mut out, &mut word);
    }

    if out.is_empty() {
        return Err(Error::InvalidInput(
            "text is empty after whitespace normalization".into(),
        ));
    }
    Ok(out)
}

/// Tokenized text mapped through a vocabulary; out-of-vocabulary pieces become UNK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenized {
    pub tokens: Vec<TokenId>,
    pub pieces: Pieces,
}

pub fn tokenize(text: &str, vocab: &Vocab, config: TokenizerConfig) -> Result<Tokenized> {
    let pieces = split_pieces(text, config)?;
    let tokens = pieces.pieces.iter().map(|p| vocab.id(p)).collect();
    Ok(Tokenized { tokens, pieces })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_and_punctuation() {
        let p = split_pieces("Good movie.", TokenizerConfig::default()).unwrap();
        assert_eq!(p.pieces, vec!["good", "movie", "."]);
        assert_eq!(p.word_of_token, vec![0, 1, 2]);
        assert_eq!(p.spans, vec![0..4, 5..10, 10..11]);
    }

    #[test]
    fn empty_and_blank_rejected() {
        assert!(matches!(
            split_pieces("", TokenizerConfig::default()),
            Err(Error::InvalidInput(_))
        ));
        assert!(split_pieces("  \n\t ", TokenizerConfig::default()).is_err());
    }

    #[test]
    fn subword_chunks_share_word_index() {
        let p = split_pieces("wonderful", TokenizerConfig::subwords(4)).unwrap();
        assert_eq!(p.pieces, vec!["wond", "erfu", "l"]);
        assert_eq!(p.word_of_token, vec![0, 0, 0]);
        assert_eq!(p.spans, vec![0..4, 4..8, 8..9]);
    }

    #[test]
    fn subword_mode_leaves_short_words() {
        let p = split_pieces("A wonderful day!", TokenizerConfig::subwords(4)).unwrap();
        assert_eq!(p.pieces, vec!["a", "wond", "erfu", "l", "day", "!"]);
        assert_eq!(p.word_of_token, vec![0, 1, 1, 1, 2, 3]);
    }

    #[test]
    fn oov_maps_to_unk() {
        let vocab = Vocab::from_tokens(["good"]);
        let t = tokenize("good film", &vocab, TokenizerConfig::default()).unwrap();
        assert_eq!(t.tokens, vec![vocab.id("good"), vocab.unk_id()]);
    }
}
