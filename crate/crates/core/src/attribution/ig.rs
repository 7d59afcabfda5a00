use crate::corpus::{Document, Partition, UNK_ID};
use crate::error::{Error, Result};
use crate::model::EmbeddingClassifier;

use super::{Attribution, Method};

pub const DEFAULT_IG_STEPS: usize = 300;

/// Integrated gradients of `class` along the straight path from `baseline`
/// to `input` (both T×d row-major), using the midpoint rule with
/// α_k = (k − ½)/n. Returns one value per position, summed over dimensions.
pub fn integrated_gradients_embedded<C: EmbeddingClassifier + ?Sized>(
    model: &C,
    input: &[f64],
    baseline: &[f64],
    class: usize,
    n_steps: usize,
) -> Result<Vec<f64>> {
    let d = model.embed_dim();
    if n_steps == 0 {
        return Err(Error::Config("integrated gradients needs at least one step".into()));
    }
    if input.len() != baseline.len() || input.is_empty() || !input.len().is_multiple_of(d) {
        return Err(Error::Mismatch(format!(
            "input of length {} and baseline of length {} are not matching T×{d} matrices",
            input.len(),
            baseline.len()
        )));
    }
    let diff: Vec<f64> = input.iter().zip(baseline).map(|(x, b)| x - b).collect();
    let mut grad_sum = vec![0.0; input.len()];
    let mut point = vec![0.0; input.len()];
    for k in 1..=n_steps {
        let alpha = (k as f64 - 0.5) / n_steps as f64;
        for ((p, b), dx) in point.iter_mut().zip(baseline).zip(&diff) {
            *p = b + alpha * dx;
        }
        let g = model.embedding_gradient(&point, class);
        for (acc, gi) in grad_sum.iter_mut().zip(g) {
            *acc += gi;
        }
    }
    let inv = 1.0 / n_steps as f64;
    Ok(diff
        .chunks_exact(d)
        .zip(grad_sum.chunks_exact(d))
        .map(|(dx, g)| dx.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * inv)
        .collect())
}

/// Token-level IG for the predicted class, with the UNK embedding at every
/// position as baseline; φ₀ is the score of the all-UNK input.
pub fn integrated_gradients<C: EmbeddingClassifier + ?Sized>(
    model: &C,
    document: &Document,
    n_steps: usize,
) -> Result<Attribution> {
    let target_class = model.predict(&document.tokens)?.class;
    let input = model.embed(&document.tokens)?;
    let unk = vec![UNK_ID; document.len()];
    let baseline = model.embed(&unk)?;
    let values = integrated_gradients_embedded(model, &input, &baseline, target_class, n_steps)?;
    let phi0 = model.scores_from_embeddings(&baseline)[target_class];
    Ok(Attribution {
        doc_id: document.id.clone(),
        partition: Partition::tokens(document.len())?,
        values,
        phi0,
        target_class,
        method: Method::Ig,
        seed: 0,
        budget_or_steps: n_steps,
    })
}
