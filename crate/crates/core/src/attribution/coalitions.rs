use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default coalition budget for `m` features: 2M + 2^11.
pub fn default_budget(m: usize) -> usize {
    2 * m + 2048
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight of one coalition of size `s` among `m` features:
/// (M−1) / (C(M,s)·s·(M−s)). Infinite for the empty and full coalitions.
pub fn shapley_kernel_weight(m: usize, s: usize) -> f64 {
    if s == 0 || s >= m {
        return f64::INFINITY;
    }
    (m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64)
}

/// Total kernel mass of all coalitions of size `s`: (M−1)/(s·(M−s)).
fn size_mass(m: usize, s: usize) -> f64 {
    (m - 1) as f64 / (s as f64 * (m - s) as f64)
}

/// Coalition masks (`true` = feature present) with regression weights.
/// The full and empty masks carry no weight; they enter as constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionPlan {
    pub num_features: usize,
    pub masks: Vec<Vec<bool>>,
    pub weights: Vec<Option<f64>>,
    pub exhaustive: bool,
}

impl CoalitionPlan {
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }
}

fn exhaustive(m: usize) -> CoalitionPlan {
    let n = 1usize << m;
    let mut masks = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for bits in 0..n {
        let mask: Vec<bool> = (0..m).map(|j| bits >> j & 1 == 1).collect();
        let s = bits.count_ones() as usize;
        weights.push((s != 0 && s != m).then(|| shapley_kernel_weight(m, s)));
        masks.push(mask);
    }
    CoalitionPlan {
        num_features: m,
        masks,
        weights,
        exhaustive: true,
    }
}

/// Plans the coalitions evaluated by KernelSHAP.
///
/// If `budget >= 2^M` every mask is enumerated once with its kernel weight.
/// Otherwise the plan starts with the full and empty masks, then all M
/// singletons and all M leave-one-out masks (each with its exact kernel
/// weight), then fills the rest of the budget with complementary pairs whose
/// size is drawn from the kernel's size distribution over 2..=M−2. Sampled
/// masks share the remaining kernel mass equally; duplicates are kept.
pub fn sample_coalitions(m: usize, budget: usize, seed: u64) -> Result<CoalitionPlan> {
    if m == 0 {
        return Err(Error::InvalidInput("no features to attribute".into()));
    }
    let full_enumeration = m < usize::BITS as usize - 1 && budget >= 1usize << m;
    let minimum = if m < 8 { (m + 2).min(1 << m) } else { m + 2 };
    if budget < minimum {
        return Err(Error::Config(format!(
            "coalition budget {budget} is below the minimum {minimum} for {m} features"
        )));
    }
    if full_enumeration {
        return Ok(exhaustive(m));
    }

    let mut masks = Vec::with_capacity(budget);
    let mut weights = Vec::with_capacity(budget);
    masks.push(vec![true; m]);
    weights.push(None);
    masks.push(vec![false; m]);
    weights.push(None);
    let edge_weight = shapley_kernel_weight(m, 1);
    for j in 0..m {
        let mut mask = vec![false; m];
        mask[j] = true;
        masks.push(mask);
        weights.push(Some(edge_weight));
    }
    for j in 0..m {
        let mut mask = vec![true; m];
        mask[j] = false;
        masks.push(mask);
        weights.push(Some(edge_weight));
    }
    masks.truncate(budget);
    weights.truncate(budget);

    let remaining = budget - masks.len();
    if remaining > 0 && m >= 4 {
        let sizes: Vec<usize> = (2..=m - 2).collect();
        let mass: Vec<f64> = sizes.iter().map(|&s| size_mass(m, s)).collect();
        let total_mass: f64 = mass.iter().sum();
        let dist = WeightedIndex::new(&mass).expect("kernel masses are positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sampled = Vec::with_capacity(remaining);
        while sampled.len() < remaining {
            let s = sizes[dist.sample(&mut rng)];
            let mut mask = vec![false; m];
            for j in index::sample(&mut rng, m, s) {
                mask[j] = true;
            }
            let complement: Vec<bool> = mask.iter().map(|b| !b).collect();
            sampled.push(mask);
            if sampled.len() < remaining {
                sampled.push(complement);
            }
        }
        let w = total_mass / sampled.len() as f64;
        weights.extend(std::iter::repeat_n(Some(w), sampled.len()));
        masks.extend(sampled);
    }

    Ok(CoalitionPlan {
        num_features: m,
        masks,
        weights,
        exhaustive: false,
    })
}
