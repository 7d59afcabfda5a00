use rayon::prelude::*;

use crate::corpus::{Document, Partition};
use crate::error::{Error, Result};
use crate::model::Classifier;

use super::kernel_shap::CoalitionGame;
use super::{Attribution, Method};

/// Largest feature count accepted by the brute-force oracle.
pub const EXACT_SHAPLEY_MAX_FEATURES: usize = 20;

/// Classic Shapley values of the game `value` over `m` players:
/// φ_i = Σ_{S ⊆ N∖{i}} |S|!(M−|S|−1)!/M! · (v(S ∪ {i}) − v(S)).
pub fn exact_shapley_values<F>(m: usize, value: F) -> Result<Vec<f64>>
where
    F: Fn(&[bool]) -> Result<f64> + Sync,
{
    if m == 0 {
        return Err(Error::InvalidInput("no features to attribute".into()));
    }
    if m > EXACT_SHAPLEY_MAX_FEATURES {
        return Err(Error::CostGuard {
            features: m,
            limit: EXACT_SHAPLEY_MAX_FEATURES,
        });
    }
    let table: Vec<f64> = (0..1usize << m)
        .into_par_iter()
        .map(|bits| {
            let mask: Vec<bool> = (0..m).map(|j| bits >> j & 1 == 1).collect();
            value(&mask)
        })
        .collect::<Result<_>>()?;

    // weight(s) = s!(m-s-1)!/m! = 1 / (m * C(m-1, s))
    let mut weight = vec![0.0; m];
    let mut binom = 1.0;
    for (s, w) in weight.iter_mut().enumerate() {
        *w = 1.0 / (m as f64 * binom);
        binom = binom * (m - 1 - s) as f64 / (s + 1) as f64;
    }

    Ok((0..m)
        .map(|i| {
            let bit = 1usize << i;
            let mut phi = 0.0;
            for s in 0..1usize << m {
                if s & bit == 0 {
                    phi += weight[s.count_ones() as usize] * (table[s | bit] - table[s]);
                }
            }
            phi
        })
        .collect())
}

/// Exact Shapley values of the UNK-masking game over `partition`'s
/// meta-tokens, for the model's predicted class.
pub fn exact_shapley<C: Classifier + ?Sized>(model: &C, document: &Document, partition: &Partition) -> Result<Attribution> {
    if partition.len() > EXACT_SHAPLEY_MAX_FEATURES {
        return Err(Error::CostGuard {
            features: partition.len(),
            limit: EXACT_SHAPLEY_MAX_FEATURES,
        });
    }
    let target_class = model.predict(&document.tokens)?.class;
    let game = CoalitionGame::new(model, &document.tokens, partition, target_class)?;
    let values = exact_shapley_values(partition.len(), |mask| game.value(mask))?;
    let phi0 = game.value(&vec![false; partition.len()])?;
    Ok(Attribution {
        doc_id: document.id.clone(),
        partition: partition.clone(),
        values,
        phi0,
        target_class,
        method: Method::ExactShapley,
        seed: 0,
        budget_or_steps: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_table() {
        let v = |mask: &[bool]| {
            Ok(match (mask[0], mask[1]) {
                (false, false) => 0.0,
                (true, false) => 1.0,
                (false, true) => 2.0,
                (true, true) => 4.0,
            })
        };
        assert_eq!(exact_shapley_values(2, v).unwrap(), vec![1.5, 2.5]);
    }

    #[test]
    fn dummy_and_symmetry_axioms() {
        // players 0 and 1 are symmetric, player 2 never matters
        let v = |mask: &[bool]| Ok(f64::from(u8::from(mask[0] && mask[1])) * 3.0 + f64::from(u8::from(mask[0] || mask[1])));
        let phi = exact_shapley_values(3, v).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-15);
        assert_eq!(phi[2], 0.0);
        assert!((phi.iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cost_guard() {
        assert!(matches!(
            exact_shapley_values(21, |_| Ok(0.0)),
            Err(Error::CostGuard { features: 21, limit: 20 })
        ));
    }
}
