use std::collections::BTreeSet;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

use super::tokenize::Pieces;

const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

fn is_terminator(piece: &str) -> bool {
    matches!(piece, "." | "!" | "?")
}

/// Rule-based sentence splitter over token pieces.
///
/// A boundary falls after a run of terminator tokens (`.`, `!`, `?`) unless
/// the word right before the run is a known abbreviation, or the run is glued
/// to a following alphanumeric character (as in `3.5`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentencizer {
    abbreviations: BTreeSet<String>,
}

impl Default for Sentencizer {
    fn default() -> Self {
        Self::from_list(DEFAULT_ABBREVIATIONS)
    }
}

impl Sentencizer {
    /// Parses an abbreviation list: one lowercase token per line, blank lines ignored.
    pub fn from_list(text: &str) -> Self {
        let abbreviations = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        Sentencizer { abbreviations }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_list(&text))
    }

    pub fn without_abbreviations() -> Self {
        Sentencizer {
            abbreviations: BTreeSet::new(),
        }
    }

    pub fn is_abbreviation(&self, word: &str) -> bool {
        self.abbreviations.contains(word)
    }

    /// Half-open token ranges of each sentence. Always at least one range;
    /// the ranges tile `0..pieces.len()`.
    pub fn sentencize(&self, raw_text: &str, pieces: &Pieces) -> Vec<Range<usize>> {
        let n = pieces.len();
        let mut bounds = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < n {
            if !is_terminator(&pieces.pieces[i]) {
                i += 1;
                continue;
            }
            let run_start = i;
            while i < n && is_terminator(&pieces.pieces[i]) {
                i += 1;
            }
            // i is one past the terminator run
            if i >= n {
                break;
            }
            let abbreviated = run_start > start
                && pieces.pieces[run_start] == "."
                && i - run_start == 1
                && self.is_abbreviation(&pieces.pieces[run_start - 1]);
            let end_byte = pieces.spans[i - 1].end;
            let glued = raw_text[end_byte..]
                .chars()
                .next()
                .is_some_and(char::is_alphanumeric);
            if !abbreviated && !glued {
                bounds.push(start..i);
                start = i;
            }
        }
        if start < n || bounds.is_empty() {
            bounds.push(start..n);
        }
        bounds
    }
}
