#![allow(dead_code)]

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use textattr::corpus::{Document, TokenId, UNK_ID};
use textattr::model::{init_model, Architecture, TextClassifier};

/// Forward pass written out by hand from the parameter accessors.
pub fn oracle_scores(model: &TextClassifier, tokens: &[TokenId]) -> Vec<f64> {
    let a = model.arch();
    let (d, h, k) = (a.embed_dim, a.hidden, a.classes);
    let [w1, b1, w2, b2] = model.head();
    let mut mean = vec![0.0; d];
    for &t in tokens {
        for (j, m) in mean.iter_mut().enumerate() {
            *m += model.embedding()[t as usize * d + j];
        }
    }
    for m in &mut mean {
        *m /= tokens.len() as f64;
    }
    let mut hidden = vec![0.0; h];
    for (u, hv) in hidden.iter_mut().enumerate() {
        let mut z = b1[u];
        for j in 0..d {
            z += w1[j * h + u] * mean[j];
        }
        *hv = z.max(0.0);
    }
    (0..k)
        .map(|c| b2[c] + (0..h).map(|u| w2[u * k + c] * hidden[u]).sum::<f64>())
        .collect()
}

/// Hidden pre-activations of the oracle forward pass on an embedded input.
pub fn oracle_preactivations(model: &TextClassifier, embedded: &[f64]) -> Vec<f64> {
    let a = model.arch();
    let (d, h) = (a.embed_dim, a.hidden);
    let t = embedded.len() / d;
    let [w1, b1, _, _] = model.head();
    (0..h)
        .map(|u| {
            let mut z = b1[u];
            for j in 0..d {
                let mean: f64 = (0..t).map(|p| embedded[p * d + j]).sum::<f64>() / t as f64;
                z += w1[j * h + u] * mean;
            }
            z
        })
        .collect()
}

/// Randomly initialized model with every parameter multiplied by `scale`,
/// so the ReLU layer switches often under masking.
pub fn scaled_model(arch: Architecture, seed: u64, scale: f64) -> TextClassifier {
    let m = init_model(arch, seed).unwrap();
    let s = |v: &[f64]| v.iter().map(|x| x * scale).collect::<Vec<_>>();
    let [w1, b1, w2, b2] = m.head();
    TextClassifier::from_parts(arch, s(m.embedding()), s(w1), s(b1), s(w2), s(b2)).unwrap()
}

pub fn random_tokens(rng: &mut ChaCha8Rng, len: usize, vocab: usize) -> Vec<TokenId> {
    (0..len).map(|_| rng.gen_range(2..vocab) as TokenId).collect()
}

/// Splits 0..len into `groups` non-empty contiguous ranges.
pub fn random_groups(rng: &mut ChaCha8Rng, len: usize, groups: usize) -> Vec<Range<usize>> {
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, len - 1, groups - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(groups);
    let mut start = 0;
    for c in cuts.into_iter().chain(std::iter::once(len)) {
        out.push(start..c);
        start = c;
    }
    out
}

pub fn doc(id: &str, tokens: Vec<TokenId>, sentences: Vec<Range<usize>>) -> Document {
    Document::from_token_ids(id, tokens, sentences, 0).unwrap()
}

/// A model whose score is a sum of per-sentence terms: sentence `j` uses
/// tokens from its own vocabulary block, each block embeds into its own two
/// dimensions and feeds its own two hidden units, and UNK embeds to zero.
pub struct SentenceAdditive {
    pub model: TextClassifier,
    pub document: Document,
}

pub fn sentence_additive(seed: u64, sentence_lengths: &[usize]) -> SentenceAdditive {
    const BLOCK: usize = 5;
    let s = sentence_lengths.len();
    let (d, h, k) = (2 * s, 2 * s, 2);
    let vocab = 2 + BLOCK * s;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    let mut embedding = vec![0.0; vocab * d];
    for j in 0..s {
        for b in 0..BLOCK {
            let t = 2 + j * BLOCK + b;
            embedding[t * d + 2 * j] = u(-2.0, 2.0);
            embedding[t * d + 2 * j + 1] = u(-2.0, 2.0);
        }
    }
    let mut w1 = vec![0.0; d * h];
    for j in 0..s {
        for a in 0..2 {
            for c in 0..2 {
                w1[(2 * j + a) * h + 2 * j + c] = u(-3.0, 3.0);
            }
        }
    }
    let b1: Vec<f64> = (0..h).map(|_| u(-0.2, 0.2)).collect();
    let w2: Vec<f64> = (0..h * k).map(|_| u(-2.0, 2.0)).collect();
    let b2: Vec<f64> = (0..k).map(|_| u(-0.1, 0.1)).collect();
    let arch = Architecture {
        vocab_size: vocab,
        embed_dim: d,
        hidden: h,
        classes: k,
    };
    let model = TextClassifier::from_parts(arch, embedding, w1, b1, w2, b2).unwrap();
    let mut tokens = Vec::new();
    let mut sentences = Vec::new();
    for (j, &len) in sentence_lengths.iter().enumerate() {
        let start = tokens.len();
        for _ in 0..len {
            tokens.push((2 + j * BLOCK + rng.gen_range(0..BLOCK)) as TokenId);
        }
        sentences.push(start..tokens.len());
    }
    debug_assert!(tokens.iter().all(|&t| t != UNK_ID));
    SentenceAdditive {
        model,
        document: doc(&format!("additive-{seed}"), tokens, sentences),
    }
}

/// Vocabulary {PAD, UNK, filler, keyword}; one hidden unit reads the keyword
/// share of the document and class 0 wins while a keyword is present.
pub fn keyword_model(b2: [f64; 2]) -> TextClassifier {
    let arch = Architecture {
        vocab_size: 4,
        embed_dim: 1,
        hidden: 1,
        classes: 2,
    };
    TextClassifier::from_parts(arch, vec![0.0, 0.0, 0.0, 1.0], vec![1.0], vec![0.0], vec![1.0, -1.0], b2.to_vec())
        .unwrap()
}

pub const FILLER: TokenId = 2;
pub const KEYWORD: TokenId = 3;

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
