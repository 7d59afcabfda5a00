use crate::corpus::{Granularity, Partition};
use crate::error::{Error, Result};

use super::Attribution;

/// Sums token attributions into the groups of `partition`. φ₀ and the target
/// class carry over, so completeness is preserved.
pub fn aggregate_indirect(token_attribution: &Attribution, partition: &Partition) -> Result<Attribution> {
    if token_attribution.granularity() != Granularity::Token {
        return Err(Error::Mismatch(format!(
            "indirect aggregation needs a token attribution, got {}",
            token_attribution.granularity()
        )));
    }
    if partition.num_tokens() != token_attribution.len() {
        return Err(Error::Mismatch(format!(
            "partition covers {} tokens but the attribution has {}",
            partition.num_tokens(),
            token_attribution.len()
        )));
    }
    if partition.granularity() == Granularity::Token {
        return Ok(token_attribution.clone());
    }
    let values = partition
        .groups()
        .iter()
        .map(|g| token_attribution.values[g.clone()].iter().sum())
        .collect();
    Ok(Attribution {
        partition: partition.clone(),
        values,
        method: token_attribution.method.indirect(),
        ..token_attribution.clone()
    })
}

/// Averages the attributions of subword tokens sharing a word index. Meant
/// for display only: the mean does not preserve completeness.
pub fn merge_subwords(token_attribution: &Attribution, word_of_token: &[usize]) -> Result<Attribution> {
    if token_attribution.granularity() != Granularity::Token || word_of_token.len() != token_attribution.len() {
        return Err(Error::Mismatch(
            "subword merging needs a token attribution aligned with the word map".into(),
        ));
    }
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    for (i, &w) in word_of_token.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if word_of_token[g.start] == w => g.end = i + 1,
            _ => groups.push(i..i + 1),
        }
    }
    let values = groups
        .iter()
        .map(|g| token_attribution.values[g.clone()].iter().sum::<f64>() / g.len() as f64)
        .collect();
    let partition = Partition::new(Granularity::Word, groups, word_of_token.len())?;
    Ok(Attribution {
        partition,
        values,
        ..token_attribution.clone()
    })
}
