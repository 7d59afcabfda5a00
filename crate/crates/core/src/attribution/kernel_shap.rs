use std::collections::HashMap;

use rayon::prelude::*;

use crate::corpus::{Document, Partition, TokenId, UNK_ID};
use crate::error::{Error, Result};
use crate::model::Classifier;

use super::coalitions::{sample_coalitions, CoalitionPlan};
use super::linalg::cholesky_solve;
use super::{Attribution, Method};

/// One evaluated coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionSample {
    pub mask: Vec<bool>,
    pub weight: f64,
    pub value: f64,
}

/// Value function over meta-token coalitions: absent groups have every token
/// replaced by UNK, and the value is the score of `target_class`.
pub struct CoalitionGame<'a, C: Classifier + ?Sized> {
    model: &'a C,
    tokens: &'a [TokenId],
    partition: &'a Partition,
    target_class: usize,
}

impl<'a, C: Classifier + ?Sized> CoalitionGame<'a, C> {
    pub fn new(model: &'a C, tokens: &'a [TokenId], partition: &'a Partition, target_class: usize) -> Result<Self> {
        if partition.num_tokens() != tokens.len() {
            return Err(Error::Mismatch(format!(
                "partition covers {} tokens but the document has {}",
                partition.num_tokens(),
                tokens.len()
            )));
        }
        if target_class >= model.num_classes() {
            return Err(Error::OutOfRange {
                index: target_class,
                len: model.num_classes(),
            });
        }
        Ok(CoalitionGame {
            model,
            tokens,
            partition,
            target_class,
        })
    }

    pub fn num_players(&self) -> usize {
        self.partition.len()
    }

    pub fn value(&self, mask: &[bool]) -> Result<f64> {
        let mut masked = self.tokens.to_vec();
        for (group, &present) in self.partition.groups().iter().zip(mask) {
            if !present {
                masked[group.clone()].fill(UNK_ID);
            }
        }
        Ok(self.model.scores(&masked)?[self.target_class])
    }

    /// Evaluates each distinct mask once (possibly in parallel) and returns
    /// values in the order of `masks`.
    pub fn values(&self, masks: &[Vec<bool>]) -> Result<Vec<f64>> {
        let mut slot: HashMap<&[bool], usize> = HashMap::new();
        let mut unique: Vec<&[bool]> = Vec::new();
        let index: Vec<usize> = masks
            .iter()
            .map(|m| {
                *slot.entry(m.as_slice()).or_insert_with(|| {
                    unique.push(m);
                    unique.len() - 1
                })
            })
            .collect();
        let evaluated: Vec<f64> = unique
            .par_iter()
            .map(|m| self.value(m))
            .collect::<Result<_>>()?;
        Ok(index.into_iter().map(|i| evaluated[i]).collect())
    }
}

/// Solves the constrained weighted least-squares problem for a coalition
/// plan whose masks evaluated to `values`.
///
/// φ₀ is pinned to the empty-coalition value and Σφ to v(full) − φ₀. The sum
/// constraint eliminates the last feature, leaving an unconstrained WLS in
/// M−1 unknowns solved through its normal equations by Cholesky. Returns
/// (φ₀, φ).
pub fn kernel_shap_values(plan: &CoalitionPlan, values: &[f64]) -> Result<(f64, Vec<f64>)> {
    let m = plan.num_features;
    if values.len() != plan.len() {
        return Err(Error::Mismatch(format!(
            "{} values for {} coalitions",
            values.len(),
            plan.len()
        )));
    }
    let find = |present: bool| {
        plan.masks
            .iter()
            .position(|mask| mask.iter().all(|&b| b == present))
            .map(|i| values[i])
            .ok_or_else(|| Error::InvalidInput("coalition plan lacks the full or empty mask".into()))
    };
    let v_full = find(true)?;
    let v_empty = find(false)?;
    let delta = v_full - v_empty;
    if m == 1 {
        return Ok((v_empty, vec![delta]));
    }

    let n = m - 1;
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    let mut z = vec![0.0; n];
    for ((mask, weight), &value) in plan.masks.iter().zip(&plan.weights).zip(values) {
        let Some(w) = *weight else { continue };
        let last = f64::from(u8::from(mask[n]));
        for j in 0..n {
            z[j] = f64::from(u8::from(mask[j])) - last;
        }
        let y = value - v_empty - last * delta;
        for i in 0..n {
            if z[i] == 0.0 {
                continue;
            }
            let wz = w * z[i];
            b[i] += wz * y;
            let row = &mut a[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] += wz * z[j];
            }
        }
    }

    let head = cholesky_solve(&a, &b, n, 1e-12).map_err(|i| {
        Error::Singular(format!(
            "the {} sampled coalitions do not identify feature {i} of {m}; increase the budget",
            plan.len()
        ))
    })?;
    let last = delta - head.iter().sum::<f64>();
    let mut phi = head;
    phi.push(last);
    Ok((v_empty, phi))
}

/// KernelSHAP over the meta-tokens of `partition`, explaining the model's
/// predicted class on the unmasked document.
pub fn kernel_shap<C: Classifier + ?Sized>(
    model: &C,
    document: &Document,
    partition: &Partition,
    budget: usize,
    seed: u64,
) -> Result<Attribution> {
    let target_class = model.predict(&document.tokens)?.class;
    let game = CoalitionGame::new(model, &document.tokens, partition, target_class)?;
    let plan = sample_coalitions(partition.len(), budget, seed)?;
    let values = game.values(&plan.masks)?;
    let (phi0, phi) = kernel_shap_values(&plan, &values)?;
    Ok(Attribution {
        doc_id: document.id.clone(),
        partition: partition.clone(),
        values: phi,
        phi0,
        target_class,
        method: Method::ShapDirect,
        seed,
        budget_or_steps: budget,
    })
}
