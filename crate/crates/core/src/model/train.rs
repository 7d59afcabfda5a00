use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Document, Split};
use crate::error::{Error, Result};
use crate::util::derive_seed;

use super::classifier::{argmax, Classifier, TextClassifier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rates: Vec<f64>,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seeds the per-epoch batch order.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rates: vec![1e-2, 1e-3, 1e-4, 1e-5],
            max_epochs: 25,
            patience: 5,
            batch_size: 32,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() || self.learning_rates.iter().any(|lr| !(*lr > 0.0)) {
            return Err(Error::Config("learning rates must be non-empty and positive".into()));
        }
        if self.max_epochs == 0 || self.patience >= self.max_epochs {
            return Err(Error::Config(format!(
                "need 0 < patience < max_epochs, got patience {} and max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) || self.weight_decay < 0.0 {
            return Err(Error::Config("epsilon must be positive and weight decay non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPointReport {
    pub learning_rate: f64,
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
    pub stopping_epoch: usize,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub grid: Vec<GridPointReport>,
    pub selected_learning_rate: f64,
    pub stopping_epoch: usize,
    pub best_validation_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

/// Mean cross-entropy and accuracy of `model` over `docs`.
pub fn evaluate_split<'a, I>(model: &TextClassifier, docs: I) -> (f64, f64)
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut n = 0usize;
    for doc in docs {
        let scores = model
            .scores(&doc.tokens)
            .expect("dataset documents are non-empty and in-vocabulary");
        loss += cross_entropy(&scores, doc.label);
        correct += usize::from(argmax(&scores) == doc.label);
        n += 1;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    (loss / n as f64, correct as f64 / n as f64)
}

pub fn accuracy<'a, I>(model: &TextClassifier, docs: I) -> f64
where
    I: IntoIterator<Item = &'a Document>,
{
    evaluate_split(model, docs).1
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn cross_entropy(scores: &[f64], label: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[label]
}

/// Gradient buffers with the same layout as the model parameters.
struct Grads {
    embedding: Vec<f64>,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl Grads {
    fn zeros(model: &TextClassifier) -> Self {
        Grads {
            embedding: vec![0.0; model.embedding.len()],
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }

    fn clear(&mut self) {
        for g in self.groups_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    fn groups_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [
            &mut self.embedding,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
        ]
    }
}

fn params_mut(model: &mut TextClassifier) -> [&mut Vec<f64>; 5] {
    [
        &mut model.embedding,
        &mut model.w1,
        &mut model.b1,
        &mut model.w2,
        &mut model.b2,
    ]
}

/// Accumulates `scale` × d(cross-entropy)/d(params) for one document and
/// returns its loss.
fn accumulate_gradient(model: &TextClassifier, doc: &Document, scale: f64, grads: &mut Grads) -> f64 {
    let (d, h, k) = (model.arch.embed_dim, model.arch.hidden, model.arch.classes);
    let pooled = model.mean_pool(&doc.tokens);
    let pre = model.pre_activation(&pooled);
    let hidden: Vec<f64> = pre.iter().map(|p| p.max(0.0)).collect();
    let scores = model.output(&hidden);
    let loss = cross_entropy(&scores, doc.label);

    let mut dscore = softmax(&scores);
    dscore[doc.label] -= 1.0;
    dscore.iter_mut().for_each(|x| *x *= scale);

    for c in 0..k {
        grads.b2[c] += dscore[c];
    }
    let mut dh = vec![0.0; h];
    for j in 0..h {
        let row = &model.w2[j * k..(j + 1) * k];
        if hidden[j] != 0.0 {
            for c in 0..k {
                grads.w2[j * k + c] += hidden[j] * dscore[c];
            }
        }
        if pre[j] > 0.0 {
            dh[j] = row.iter().zip(&dscore).map(|(w, g)| w * g).sum();
        }
    }
    let mut dpool = vec![0.0; d];
    for r in 0..d {
        let row = &model.w1[r * h..(r + 1) * h];
        let mut acc = 0.0;
        for j in 0..h {
            grads.w1[r * h + j] += pooled[r] * dh[j];
            acc += row[j] * dh[j];
        }
        dpool[r] = acc;
    }
    for j in 0..h {
        grads.b1[j] += dh[j];
    }
    let inv_t = 1.0 / doc.tokens.len() as f64;
    for &t in &doc.tokens {
        let row = &mut grads.embedding[t as usize * d..(t as usize + 1) * d];
        for (g, dp) in row.iter_mut().zip(&dpool) {
            *g += dp * inv_t;
        }
    }
    loss
}

/// AdamW with decoupled weight decay: `p ← p − lr·(m̂/(√v̂ + ε) + λ·p)`.
struct AdamW {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    weight_decay: f64,
    step: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamW {
    fn new(model: &mut TextClassifier, lr: f64, config: &TrainConfig) -> Self {
        let sizes: Vec<usize> = params_mut(model).iter().map(|p| p.len()).collect();
        AdamW {
            lr,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            weight_decay: config.weight_decay,
            step: 0,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn update(&mut self, model: &mut TextClassifier, grads: &mut Grads) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        for (gi, (param, grad)) in params_mut(model)
            .into_iter()
            .zip(grads.groups_mut())
            .enumerate()
        {
            let m = &mut self.first[gi];
            let v = &mut self.second[gi];
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                param[i] -= self.lr * (m_hat / (v_hat.sqrt() + self.epsilon) + self.weight_decay * param[i]);
            }
        }
    }
}

fn train_grid_point(
    init: &TextClassifier,
    train: &[&Document],
    validation: &[&Document],
    lr: f64,
    config: &TrainConfig,
) -> (TextClassifier, GridPointReport) {
    let mut model = init.clone();
    let mut best = model.clone();
    let mut optimizer = AdamW::new(&mut model, lr, config);
    let mut grads = Grads::zeros(&model);
    let mut report = GridPointReport {
        learning_rate: lr,
        epochs: Vec::new(),
        best_epoch: 0,
        best_validation_accuracy: f64::NEG_INFINITY,
        stopping_epoch: 0,
        diverged: false,
    };
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stale_epochs = 0;

    for epoch in 1..=config.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, epoch as u64));
        order.shuffle(&mut rng);
        let mut batch_losses = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.clear();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                batch_losses += accumulate_gradient(&model, train[i], scale, &mut grads);
            }
            optimizer.update(&mut model, &mut grads);
        }
        report.stopping_epoch = epoch;
        if !batch_losses.is_finite() || !model.is_finite() {
            report.diverged = true;
            break;
        }
        let (train_loss, train_accuracy) = evaluate_split(&model, train.iter().copied());
        let (validation_loss, validation_accuracy) =
            evaluate_split(&model, validation.iter().copied());
        report.epochs.push(EpochStats {
            epoch,
            train_loss,
            train_accuracy,
            validation_loss,
            validation_accuracy,
        });
        if validation_accuracy > report.best_validation_accuracy {
            report.best_validation_accuracy = validation_accuracy;
            report.best_epoch = epoch;
            best = model.clone();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }
    (best, report)
}

/// Trains one copy of `model` per learning rate and keeps the copy with the
/// best validation accuracy (earlier grid entries win ties). Each grid point
/// uses early stopping on validation accuracy and restores its best epoch.
pub fn train(
    model: &TextClassifier,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(TextClassifier, TrainReport)> {
    config.validate()?;
    if model.arch.classes < dataset.num_classes || model.arch.vocab_size < dataset.vocab.len() {
        return Err(Error::Mismatch(
            "model architecture is smaller than the dataset's classes or vocabulary".into(),
        ));
    }
    let train_docs: Vec<&Document> = dataset.split(Split::Train).collect();
    let val_docs: Vec<&Document> = dataset.split(Split::Validation).collect();
    if train_docs.is_empty() || val_docs.is_empty() {
        return Err(Error::InvalidInput(
            "training needs non-empty train and validation splits".into(),
        ));
    }

    let results: Vec<(TextClassifier, GridPointReport)> = config
        .learning_rates
        .par_iter()
        .map(|&lr| train_grid_point(model, &train_docs, &val_docs, lr, config))
        .collect();

    let mut chosen: Option<usize> = None;
    for (i, (_, r)) in results.iter().enumerate() {
        if r.diverged || r.epochs.is_empty() {
            continue;
        }
        if chosen.is_none_or(|c| r.best_validation_accuracy > results[c].1.best_validation_accuracy) {
            chosen = Some(i);
        }
    }
    let Some(chosen) = chosen else {
        return Err(Error::Numerical(
            "training diverged at every learning rate".into(),
        ));
    };
    let mut grid = Vec::with_capacity(results.len());
    let mut selected = None;
    for (i, (m, r)) in results.into_iter().enumerate() {
        if i == chosen {
            selected = Some(m);
        }
        grid.push(r);
    }
    let selected = selected.expect("chosen index exists");
    let test_docs: Vec<&Document> = dataset.split(Split::Test).collect();
    let test_accuracy = (!test_docs.is_empty()).then(|| accuracy(&selected, test_docs));
    let report = TrainReport {
        selected_learning_rate: grid[chosen].learning_rate,
        stopping_epoch: grid[chosen].stopping_epoch,
        best_validation_accuracy: grid[chosen].best_validation_accuracy,
        test_accuracy,
        grid,
    };
    Ok((selected, report))
}
