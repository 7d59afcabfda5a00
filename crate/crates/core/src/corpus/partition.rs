use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Token,
    Word,
    Sentence,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Token => "token",
            Granularity::Word => "word",
            Granularity::Sentence => "sentence",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "token" => Ok(Granularity::Token),
            "word" => Ok(Granularity::Word),
            "sentence" => Ok(Granularity::Sentence),
            other => Err(Error::Config(format!("unknown granularity {other:?}"))),
        }
    }
}

/// Ordered, contiguous, non-overlapping token groups (meta-tokens) covering `0..T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    granularity: Granularity,
    groups: Vec<Range<usize>>,
}

impl Partition {
    pub fn new(granularity: Granularity, groups: Vec<Range<usize>>, num_tokens: usize) -> Result<Self> {
        if num_tokens == 0 {
            return Err(Error::InvalidInput("partition over zero tokens".into()));
        }
        let mut next = 0;
        for g in &groups {
            if g.start != next || g.end <= g.start {
                return Err(Error::InvalidInput(format!(
                    "groups must be non-empty and contiguous; found {g:?} where {next} was expected"
                )));
            }
            next = g.end;
        }
        if next != num_tokens {
            return Err(Error::InvalidInput(format!(
                "groups cover {next} tokens, expected {num_tokens}"
            )));
        }
        if granularity == Granularity::Token && groups.len() != num_tokens {
            return Err(Error::InvalidInput("token partition must use singleton groups".into()));
        }
        Ok(Partition {
            granularity,
            groups,
        })
    }

    pub fn tokens(num_tokens: usize) -> Result<Self> {
        Self::new(Granularity::Token, (0..num_tokens).map(|i| i..i + 1).collect(), num_tokens)
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    /// Number of meta-tokens, M.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Number of underlying tokens, T.
    pub fn num_tokens(&self) -> usize {
        self.groups.last().map_or(0, |g| g.end)
    }

    pub fn group_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.groups.iter().map(|g| g.len())
    }
}

pub fn make_partition(document: &Document, granularity: Granularity) -> Result<Partition> {
    let t = document.len();
    match granularity {
        Granularity::Token => Partition::tokens(t),
        Granularity::Word => {
            let mut groups: Vec<Range<usize>> = Vec::new();
            for (i, &w) in document.word_of_token.iter().enumerate() {
                match groups.last_mut() {
                    Some(g) if document.word_of_token[g.start] == w => g.end = i + 1,
                    _ => groups.push(i..i + 1),
                }
            }
            Partition::new(Granularity::Word, groups, t)
        }
        Granularity::Sentence => {
            Partition::new(Granularity::Sentence, document.sentence_boundaries.clone(), t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(words: Vec<usize>, sentences: Vec<Range<usize>>) -> Document {
        let n = words.len();
        let mut d = Document::from_token_ids("d", (0..n as u32).map(|i| i + 2).collect(), sentences, 0)
            .unwrap();
        d.word_of_token = words;
        d
    }

    #[test]
    fn token_partition_is_singletons() {
        let d = doc(vec![0, 1, 2], vec![0..3]);
        let p = make_partition(&d, Granularity::Token).unwrap();
        assert_eq!(p.groups(), &[0..1, 1..2, 2..3]);
    }

    #[test]
    fn word_partition_merges_subwords() {
        let d = doc(vec![0, 0, 1], vec![0..3]);
        let p = make_partition(&d, Granularity::Word).unwrap();
        assert_eq!(p.groups(), &[0..2, 2..3]);
    }

    #[test]
    fn sentence_partition_uses_boundaries() {
        let d = doc(vec![0, 1, 2, 3, 4, 5], vec![0..3, 3..6]);
        let p = make_partition(&d, Granularity::Sentence).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.num_tokens(), 6);
    }

    #[test]
    fn invalid_groups_rejected() {
        assert!(Partition::new(Granularity::Sentence, vec![0..2, 3..4], 4).is_err());
        assert!(Partition::new(Granularity::Sentence, vec![0..2, 1..4], 4).is_err());
        assert!(Partition::new(Granularity::Sentence, vec![0..2], 4).is_err());
        assert!(Partition::new(Granularity::Token, vec![0..2, 2..3], 3).is_err());
        assert!(Partition::new(Granularity::Sentence, vec![], 0).is_err());
    }

    #[test]
    fn granularity_parses() {
        assert_eq!("sentence".parse::<Granularity>().unwrap(), Granularity::Sentence);
        assert!("phrase".parse::<Granularity>().is_err());
    }
}
