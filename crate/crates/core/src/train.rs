//! Probe training: seeded minibatch optimization with the Adam update rule
//! and early stopping on tuning-set token accuracy.
//!
//! Training examples are exactly the tokens of the seen-half sentences;
//! the unseen half is never read. The returned model is the parameter
//! snapshot with the best tuning accuracy encountered (ties keep the
//! earlier epoch, with the initialization as the epoch-0 baseline).

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::probe::{loss_and_gradient, ProbeGradient, ProbeKind, ProbeModel};
use crate::scalar::Scalar;
use crate::store::{StoreMode, VectorSource};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

/// Hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<F> {
    pub learning_rate: F,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Consecutive epochs without tuning-accuracy improvement tolerated
    /// before stopping.
    pub patience: usize,
    /// Hidden layer width (MLP only).
    pub hidden_dim: usize,
    pub seed: u64,
}

impl<F: Scalar> Default for TrainConfig<F> {
    fn default() -> Self {
        Self {
            learning_rate: F::from_f64_lossy(1e-3),
            batch_size: 64,
            max_epochs: 100,
            patience: 5,
            hidden_dim: 512,
            seed: 0,
        }
    }
}

impl<F: Scalar> TrainConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > F::zero()) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidInput("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidInput(
                "batch_size, max_epochs and hidden_dim must be positive".into(),
            ));
        }
        Ok(())
    }
}

struct Adam<F> {
    first_moment: Vec<F>,
    second_moment: Vec<F>,
    beta1_power: F,
    beta2_power: F,
}

impl<F: Scalar> Adam<F> {
    fn new(parameter_count: usize) -> Self {
        Self {
            first_moment: vec![F::zero(); parameter_count],
            second_moment: vec![F::zero(); parameter_count],
            beta1_power: F::one(),
            beta2_power: F::one(),
        }
    }

    fn step(&mut self, model: &mut ProbeModel<F>, gradient: &ProbeGradient<F>, lr: F) {
        let beta1 = F::from_f64_lossy(ADAM_BETA1);
        let beta2 = F::from_f64_lossy(ADAM_BETA2);
        let epsilon = F::from_f64_lossy(ADAM_EPSILON);
        self.beta1_power = self.beta1_power * beta1;
        self.beta2_power = self.beta2_power * beta2;
        let correction1 = F::one() - self.beta1_power;
        let correction2 = F::one() - self.beta2_power;

        let mut offset = 0;
        let grads = gradient.slices();
        for (params, grad) in model.param_slices_mut().into_iter().zip(grads) {
            for (p, &g) in params.iter_mut().zip(grad) {
                let m = &mut self.first_moment[offset];
                let v = &mut self.second_moment[offset];
                *m = beta1 * *m + (F::one() - beta1) * g;
                *v = beta2 * *v + (F::one() - beta2) * g * g;
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                *p = *p - lr * m_hat / (v_hat.sqrt() + epsilon);
                offset += 1;
            }
        }
    }
}

/// Token accuracy of `model` over all corpus tokens with vectors.
///
/// Contextual stores must cover every token; static stores may leave tokens
/// uncovered, and those are excluded from the count.
pub fn token_accuracy<F: Scalar, S: VectorSource<F>>(
    model: &ProbeModel<F>,
    corpus: &LabeledCorpus,
    store: &S,
) -> Result<f64> {
    let mut correct = 0u64;
    let mut total = 0u64;
    for (sent_id, tok_idx, token) in corpus.tokens() {
        match store.vector(sent_id, tok_idx) {
            Some(vector) => {
                let (label, _) = model.predict(vector)?;
                total += 1;
                if label == token.label {
                    correct += 1;
                }
            }
            None if store.mode() == StoreMode::Static => continue,
            None => {
                return Err(Error::InvalidInput(format!(
                    "missing vector for token ({sent_id}, {tok_idx})"
                )))
            }
        }
    }
    if total == 0 {
        return Err(Error::InvalidInput(
            "no tokens with vectors to evaluate".into(),
        ));
    }
    Ok(correct as f64 / total as f64)
}

/// Trains a probe on the tokens of the seen-half sentences, selecting the
/// snapshot with the best tuning-set accuracy. Deterministic per seed.
pub fn train_probe<F: Scalar, S: VectorSource<F>>(
    store: &S,
    train: &LabeledCorpus,
    seen_sentence_ids: &BTreeSet<usize>,
    tuning: &LabeledCorpus,
    tuning_store: &S,
    kind: ProbeKind,
    config: &TrainConfig<F>,
) -> Result<ProbeModel<F>> {
    config.validate()?;
    if seen_sentence_ids.is_empty() {
        return Err(Error::InvalidInput("seen sentence set is empty".into()));
    }
    if let Some(&bad) = seen_sentence_ids.iter().find(|&&id| id >= train.len()) {
        return Err(Error::InvalidInput(format!(
            "seen sentence id {bad} out of range ({} sentences)",
            train.len()
        )));
    }
    if train.label_inventory() != tuning.label_inventory() {
        return Err(Error::InvalidInput(
            "label inventories of training and tuning corpora differ".into(),
        ));
    }
    let dimension = store.dimension();
    if tuning_store.dimension() != dimension {
        return Err(Error::InvalidInput(format!(
            "tuning store dimension {} != training store dimension {dimension}",
            tuning_store.dimension()
        )));
    }
    let label_count = train.label_inventory().len();
    if label_count == 0 {
        return Err(Error::InvalidInput("empty label inventory".into()));
    }

    // Examples are (sentence, token, gold) references into the seen half,
    // in corpus order; vectors are fetched through the store on use so a
    // wrapping source observes every access.
    let mut examples: Vec<(usize, usize, usize)> = Vec::new();
    for &sent_id in seen_sentence_ids {
        let sentence = &train.sentences()[sent_id];
        for (tok_idx, token) in sentence.tokens.iter().enumerate() {
            match store.vector(sent_id, tok_idx) {
                Some(_) => examples.push((sent_id, tok_idx, token.label)),
                None if store.mode() == StoreMode::Static => continue,
                None => {
                    return Err(Error::InvalidInput(format!(
                        "missing vector for seen token ({sent_id}, {tok_idx})"
                    )))
                }
            }
        }
    }
    if examples.is_empty() {
        return Err(Error::InvalidInput(
            "seen sentences contain no tokens with vectors".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = ProbeModel::init(kind, dimension, label_count, config.hidden_dim, &mut rng)?;
    let mut adam = Adam::new(model.parameters().len());

    let mut best_model = model.clone();
    let mut best_accuracy = token_accuracy(&model, tuning, tuning_store)?;
    let mut stale_epochs = 0usize;

    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[F], usize)> = chunk
                .iter()
                .map(|&i| {
                    let (sent_id, tok_idx, label) = examples[i];
                    let vector = store
                        .vector(sent_id, tok_idx)
                        .expect("example vector present");
                    (vector, label)
                })
                .collect();
            let (loss, gradient) = loss_and_gradient(&model, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            adam.step(&mut model, &gradient, config.learning_rate);
        }
        let accuracy = token_accuracy(&model, tuning, tuning_store)?;
        if accuracy > best_accuracy {
            best_accuracy = accuracy;
            best_model = model.clone();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }
    Ok(best_model)
}
