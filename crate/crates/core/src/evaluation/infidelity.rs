use serde::{Deserialize, Serialize};

use crate::attribution::Attribution;
use crate::corpus::{Document, UNK_ID};
use crate::error::{Error, Result};
use crate::model::Classifier;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Infidelity {
    /// Share of tokens masked when the prediction first changed, in percent.
    pub percent: f64,
    pub masked_tokens: usize,
    /// False when masking every feature never changed the prediction; the
    /// percentage is then 100 by convention.
    pub flipped: bool,
}

/// Masks whole features in decreasing φ order (ties by lower index) until
/// the predicted class changes, and reports the masked token share.
pub fn infidelity<C: Classifier + ?Sized>(model: &C, document: &Document, attribution: &Attribution) -> Result<Infidelity> {
    let t = document.len();
    if attribution.partition.num_tokens() != t {
        return Err(Error::Mismatch(format!(
            "attribution for {} does not cover the {t} tokens of {}",
            attribution.doc_id, document.id
        )));
    }
    let original = model.predict(&document.tokens)?.class;
    if original != attribution.target_class {
        return Err(Error::Mismatch(format!(
            "attribution explains class {} but the model predicts {original}",
            attribution.target_class
        )));
    }
    let mut order: Vec<usize> = (0..attribution.len()).collect();
    order.sort_by(|&a, &b| {
        attribution.values[b]
            .total_cmp(&attribution.values[a])
            .then(a.cmp(&b))
    });
    let mut tokens = document.tokens.clone();
    let mut masked = 0;
    for feature in order {
        let group = attribution.partition.groups()[feature].clone();
        masked += group.len();
        tokens[group].fill(UNK_ID);
        if model.predict(&tokens)?.class != original {
            return Ok(Infidelity {
                percent: 100.0 * masked as f64 / t as f64,
                masked_tokens: masked,
                flipped: true,
            });
        }
    }
    Ok(Infidelity {
        percent: 100.0,
        masked_tokens: t,
        flipped: false,
    })
}
