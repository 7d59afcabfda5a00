use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenId;
use crate::error::{Error, Result};

/// Class scores plus the argmax (lowest index wins ties) and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub class: usize,
    pub score: f64,
}

impl Prediction {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let class = argmax(&scores);
        let score = scores[class];
        Prediction {
            scores,
            class,
            score,
        }
    }
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Anything that maps a token sequence to K class scores.
pub trait Classifier: Sync {
    fn num_classes(&self) -> usize;

    fn scores(&self, tokens: &[TokenId]) -> Result<Vec<f64>>;

    fn predict(&self, tokens: &[TokenId]) -> Result<Prediction> {
        Ok(Prediction::from_scores(self.scores(tokens)?))
    }
}

/// A classifier whose input passes through a token embedding, exposing the
/// score as a differentiable function of the embedded sequence (T×d, row-major).
pub trait EmbeddingClassifier: Classifier {
    fn embed_dim(&self) -> usize;

    fn embed(&self, tokens: &[TokenId]) -> Result<Vec<f64>>;

    fn scores_from_embeddings(&self, embedded: &[f64]) -> Vec<f64>;

    /// d(score of `class`)/d(embedded), same shape as `embedded`.
    fn embedding_gradient(&self, embedded: &[f64], class: usize) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 || self.embed_dim == 0 || self.hidden == 0 || self.classes == 0 {
            return Err(Error::Config(format!(
                "architecture needs vocab_size >= 2 and embed_dim, hidden, classes >= 1; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Mean-pooled embeddings followed by one ReLU layer and a linear output:
///
/// ```text
/// scores = W2ᵀ · relu(W1ᵀ · mean(E[tokens]) + b1) + b2
/// ```
///
/// All matrices are row-major: `embedding` is V×d, `w1` is d×h, `w2` is h×K.
#[derive(Debug, Clone, PartialEq)]
pub struct TextClassifier {
    pub(crate) arch: Architecture,
    pub(crate) embedding: Vec<f64>,
    pub(crate) w1: Vec<f64>,
    pub(crate) b1: Vec<f64>,
    pub(crate) w2: Vec<f64>,
    pub(crate) b2: Vec<f64>,
    pub(crate) init_seed: u64,
    pub(crate) head_seed: Option<u64>,
}

fn uniform_fill(rng: &mut ChaCha8Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let scale = 1.0 / (fan_in as f64).sqrt();
    let dist = Uniform::new_inclusive(-scale, scale);
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// Draws W1, b1, W2, b2 in that order.
fn draw_head(arch: &Architecture, rng: &mut ChaCha8Rng) -> [Vec<f64>; 4] {
    let (d, h, k) = (arch.embed_dim, arch.hidden, arch.classes);
    let w1 = uniform_fill(rng, d * h, d);
    let b1 = uniform_fill(rng, h, d);
    let w2 = uniform_fill(rng, h * k, h);
    let b2 = uniform_fill(rng, k, h);
    [w1, b1, w2, b2]
}

/// Parameters drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the embedding
/// uses fan_in = d. Deterministic in `seed`.
pub fn init_model(arch: Architecture, seed: u64) -> Result<TextClassifier> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let embedding = uniform_fill(&mut rng, arch.vocab_size * arch.embed_dim, arch.embed_dim);
    let [w1, b1, w2, b2] = draw_head(&arch, &mut rng);
    Ok(TextClassifier {
        arch,
        embedding,
        w1,
        b1,
        w2,
        b2,
        init_seed: seed,
        head_seed: None,
    })
}

/// Copy of `model` with the embedding kept and the head re-drawn from `seed`.
pub fn randomize_head(model: &TextClassifier, seed: u64) -> TextClassifier {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [w1, b1, w2, b2] = draw_head(&model.arch, &mut rng);
    TextClassifier {
        arch: model.arch,
        embedding: model.embedding.clone(),
        w1,
        b1,
        w2,
        b2,
        init_seed: model.init_seed,
        head_seed: Some(seed),
    }
}

impl TextClassifier {
    pub fn from_parts(
        arch: Architecture,
        embedding: Vec<f64>,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        arch.validate()?;
        let (v, d, h, k) = (arch.vocab_size, arch.embed_dim, arch.hidden, arch.classes);
        let shapes = [
            ("embedding", embedding.len(), v * d),
            ("w1", w1.len(), d * h),
            ("b1", b1.len(), h),
            ("w2", w2.len(), h * k),
            ("b2", b2.len(), k),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(Error::Mismatch(format!("{name} has {got} values, expected {want}")));
            }
        }
        let model = TextClassifier {
            arch,
            embedding,
            w1,
            b1,
            w2,
            b2,
            init_seed: 0,
            head_seed: None,
        };
        if !model.is_finite() {
            return Err(Error::Numerical("non-finite parameter".into()));
        }
        Ok(model)
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn head_seed(&self) -> Option<u64> {
        self.head_seed
    }

    pub fn embedding(&self) -> &[f64] {
        &self.embedding
    }

    pub fn head(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn embedding_row(&self, token: TokenId) -> &[f64] {
        let d = self.arch.embed_dim;
        let t = token as usize;
        &self.embedding[t * d..(t + 1) * d]
    }

    pub fn is_finite(&self) -> bool {
        self.embedding
            .iter()
            .chain(&self.w1)
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .all(|x| x.is_finite())
    }

    fn check_tokens(&self, tokens: &[TokenId]) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::InvalidInput("empty token sequence".into()));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= self.arch.vocab_size) {
            return Err(Error::OutOfRange {
                index: bad as usize,
                len: self.arch.vocab_size,
            });
        }
        Ok(())
    }

    pub(crate) fn mean_pool(&self, tokens: &[TokenId]) -> Vec<f64> {
        let d = self.arch.embed_dim;
        let mut m = vec![0.0; d];
        for &t in tokens {
            for (acc, e) in m.iter_mut().zip(self.embedding_row(t)) {
                *acc += e;
            }
        }
        let inv = 1.0 / tokens.len() as f64;
        m.iter_mut().for_each(|x| *x *= inv);
        m
    }

    /// Hidden pre-activations W1ᵀ·m + b1.
    pub(crate) fn pre_activation(&self, pooled: &[f64]) -> Vec<f64> {
        let h = self.arch.hidden;
        let mut pre = self.b1.clone();
        for (k, &mk) in pooled.iter().enumerate() {
            let row = &self.w1[k * h..(k + 1) * h];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += mk * w;
            }
        }
        pre
    }

    pub(crate) fn output(&self, hidden: &[f64]) -> Vec<f64> {
        let k = self.arch.classes;
        let mut out = self.b2.clone();
        for (j, &hj) in hidden.iter().enumerate() {
            if hj == 0.0 {
                continue;
            }
            let row = &self.w2[j * k..(j + 1) * k];
            for (o, w) in out.iter_mut().zip(row) {
                *o += hj * w;
            }
        }
        out
    }

    fn scores_from_pooled(&self, pooled: &[f64]) -> Vec<f64> {
        let hidden: Vec<f64> = self
            .pre_activation(pooled)
            .into_iter()
            .map(|p| p.max(0.0))
            .collect();
        self.output(&hidden)
    }

    /// Gradient of class `class`'s score with respect to the pooled vector.
    fn pooled_gradient(&self, pooled: &[f64], class: usize) -> Vec<f64> {
        let (d, h, k) = (self.arch.embed_dim, self.arch.hidden, self.arch.classes);
        let pre = self.pre_activation(pooled);
        // relu'(0) is taken as 0
        let delta: Vec<f64> = (0..h)
            .map(|j| if pre[j] > 0.0 { self.w2[j * k + class] } else { 0.0 })
            .collect();
        (0..d)
            .map(|r| {
                self.w1[r * h..(r + 1) * h]
                    .iter()
                    .zip(&delta)
                    .map(|(w, dj)| w * dj)
                    .sum()
            })
            .collect()
    }
}

impl Classifier for TextClassifier {
    fn num_classes(&self) -> usize {
        self.arch.classes
    }

    fn scores(&self, tokens: &[TokenId]) -> Result<Vec<f64>> {
        self.check_tokens(tokens)?;
        Ok(self.scores_from_pooled(&self.mean_pool(tokens)))
    }
}

impl EmbeddingClassifier for TextClassifier {
    fn embed_dim(&self) -> usize {
        self.arch.embed_dim
    }

    fn embed(&self, tokens: &[TokenId]) -> Result<Vec<f64>> {
        self.check_tokens(tokens)?;
        Ok(tokens
            .iter()
            .flat_map(|&t| self.embedding_row(t).iter().copied())
            .collect())
    }

    fn scores_from_embeddings(&self, embedded: &[f64]) -> Vec<f64> {
        self.scores_from_pooled(&pool_rows(embedded, self.arch.embed_dim))
    }

    fn embedding_gradient(&self, embedded: &[f64], class: usize) -> Vec<f64> {
        let d = self.arch.embed_dim;
        let t = embedded.len() / d;
        let pooled = pool_rows(embedded, d);
        let g = self.pooled_gradient(&pooled, class);
        // every position receives the same 1/T share
        let inv = 1.0 / t as f64;
        let row: Vec<f64> = g.iter().map(|x| x * inv).collect();
        row.iter().copied().cycle().take(t * d).collect()
    }
}

fn pool_rows(embedded: &[f64], d: usize) -> Vec<f64> {
    let t = embedded.len() / d;
    let mut m = vec![0.0; d];
    for row in embedded.chunks_exact(d) {
        for (acc, x) in m.iter_mut().zip(row) {
            *acc += x;
        }
    }
    let inv = 1.0 / t as f64;
    m.iter_mut().for_each(|x| *x *= inv);
    m
}
