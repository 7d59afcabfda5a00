//! Built-in differentiable text classifier: mean-pooled embeddings feeding a
//! ReLU hidden layer and a linear output, trained with AdamW.

mod checkpoint;
mod classifier;
mod train;

use std::collections::BTreeSet;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use classifier::{
    argmax, init_model, randomize_head, Architecture, Classifier, EmbeddingClassifier, Prediction,
    TextClassifier,
};
pub use train::{accuracy, evaluate_split, train, EpochStats, GridPointReport, TrainConfig, TrainReport};

use crate::corpus::{TokenId, Vocab};
use crate::error::{Error, Result};

/// Replaces the tokens at `positions` with UNK. Length never changes.
pub fn mask_tokens(tokens: &[TokenId], positions: &BTreeSet<usize>, vocab: &Vocab) -> Result<Vec<TokenId>> {
    if let Some(&bad) = positions.iter().find(|&&p| p >= tokens.len()) {
        return Err(Error::OutOfRange {
            index: bad,
            len: tokens.len(),
        });
    }
    let mut out = tokens.to_vec();
    for &p in positions {
        out[p] = vocab.unk_id();
    }
    Ok(out)
}
