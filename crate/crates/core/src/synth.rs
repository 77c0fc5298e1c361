//! Synthetic corpora with known memorization behavior.
//!
//! Every word type gets a fixed label and a fixed random identity vector;
//! every label gets a fixed prototype vector. A token's representation is
//!
//! ```text
//! v = α · prototype(label) + (1 − α) · identity(type) + noise(σ)
//! ```
//!
//! so α = 1 gives representations from which labels generalize perfectly to
//! new words, and α = 0 gives representations that only expose the word
//! identity, where a probe can succeed on training words solely by
//! memorization. Types are drawn from a Zipf distribution so the seen and
//! unseen word sets are populated the way skewed natural vocabularies
//! populate them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledCorpus, Sentence, Token};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::store::RepresentationStore;

/// Parameters of the synthetic world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_train_sentences: usize,
    pub n_test_sentences: usize,
    pub sentence_length: usize,
    pub vocab_size: usize,
    pub n_labels: usize,
    pub dimension: usize,
    /// Skew of the type frequency distribution (1.0 = classic Zipf).
    pub zipf_exponent: f64,
    /// α in [0,1]: 1 = pure abstraction, 0 = pure identity.
    pub abstraction_weight: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train_sentences == 0
            || self.n_test_sentences == 0
            || self.sentence_length == 0
            || self.vocab_size == 0
            || self.n_labels == 0
            || self.dimension == 0
        {
            return Err(Error::InvalidInput(
                "all synthetic corpus sizes must be positive".into(),
            ));
        }
        if self.vocab_size < self.n_labels {
            return Err(Error::InvalidInput(format!(
                "vocab_size {} must be at least n_labels {}",
                self.vocab_size, self.n_labels
            )));
        }
        if !(self.zipf_exponent > 0.0) || !self.zipf_exponent.is_finite() {
            return Err(Error::InvalidInput("zipf_exponent must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.abstraction_weight) {
            return Err(Error::InvalidInput(format!(
                "abstraction_weight {} outside [0, 1]",
                self.abstraction_weight
            )));
        }
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidInput("noise_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// The generated corpora and their token-aligned stores.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData<F> {
    pub train: LabeledCorpus,
    pub tuning: LabeledCorpus,
    pub test: LabeledCorpus,
    pub train_store: RepresentationStore<F>,
    pub tuning_store: RepresentationStore<F>,
    pub test_store: RepresentationStore<F>,
}

/// Inverse-CDF sampler over ranks 0..n with P(r) ∝ 1/(r+1)^s.
struct ZipfSampler {
    cdf: Vec<f64>,
}

impl ZipfSampler {
    fn new(n: usize, exponent: f64) -> Self {
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        for rank in 0..n {
            acc += 1.0 / ((rank + 1) as f64).powf(exponent);
            cdf.push(acc);
        }
        let total = *cdf.last().expect("non-empty vocabulary");
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Self { cdf }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

fn unit_gaussian(dimension: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dimension).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    v
}

/// Generates train/tuning/test corpora with token representations. The
/// tuning corpus holds max(1, n_train_sentences/10) sentences. Word types,
/// their labels, identity vectors and label prototypes are shared across
/// the three parts; everything is deterministic in the seed.
pub fn generate<F: Scalar>(config: &SynthConfig) -> Result<SynthData<F>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let type_labels: Vec<usize> = (0..config.vocab_size)
        .map(|_| rng.gen_range(0..config.n_labels))
        .collect();
    let prototypes: Vec<Vec<f64>> = (0..config.n_labels)
        .map(|_| unit_gaussian(config.dimension, &mut rng))
        .collect();
    let identities: Vec<Vec<f64>> = (0..config.vocab_size)
        .map(|_| unit_gaussian(config.dimension, &mut rng))
        .collect();
    let zipf = ZipfSampler::new(config.vocab_size, config.zipf_exponent);
    let inventory: Vec<String> = (0..config.n_labels).map(|l| format!("L{l}")).collect();

    let n_tuning = (config.n_train_sentences / 10).max(1);
    let part = |n_sentences: usize, rng: &mut ChaCha8Rng| -> Result<(LabeledCorpus, RepresentationStore<F>)> {
        let alpha = config.abstraction_weight;
        let mut sentences = Vec::with_capacity(n_sentences);
        let mut vectors = Vec::with_capacity(n_sentences);
        for id in 0..n_sentences {
            let mut tokens = Vec::with_capacity(config.sentence_length);
            let mut rows = Vec::with_capacity(config.sentence_length);
            for _ in 0..config.sentence_length {
                let word_type = zipf.sample(rng);
                let label = type_labels[word_type];
                let row: Vec<F> = (0..config.dimension)
                    .map(|j| {
                        let noise: f64 = rng.sample(StandardNormal);
                        let value = alpha * prototypes[label][j]
                            + (1.0 - alpha) * identities[word_type][j]
                            + config.noise_sigma * noise;
                        F::from_f64_lossy(value)
                    })
                    .collect();
                tokens.push(Token {
                    surface: format!("w{word_type}"),
                    label,
                });
                rows.push(row);
            }
            sentences.push(Sentence { id, tokens });
            vectors.push(rows);
        }
        let corpus = LabeledCorpus::new(sentences, inventory.clone())?;
        let store = RepresentationStore::from_vectors(config.dimension, vectors)?;
        Ok((corpus, store))
    };

    let (train, train_store) = part(config.n_train_sentences, &mut rng)?;
    let (tuning, tuning_store) = part(n_tuning, &mut rng)?;
    let (test, test_store) = part(config.n_test_sentences, &mut rng)?;
    Ok(SynthData {
        train,
        tuning,
        test,
        train_store,
        tuning_store,
        test_store,
    })
}

/// Result of the constant-prediction baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    /// Accuracy over covered tokens; 0 when no token is covered.
    pub accuracy: f64,
    pub correct_tokens: u64,
    pub covered_tokens: u64,
}

impl BaselineResult {
    /// True when the word set covered no test token.
    pub fn zero_coverage(&self) -> bool {
        self.covered_tokens == 0
    }
}

/// Accuracy of always predicting the most frequent label of the test set
/// (ties toward the lowest label id), counted only over tokens whose
/// surface is in `word_set`.
pub fn majority_label_baseline<S>(test: &LabeledCorpus, word_set: &std::collections::BTreeSet<S>) -> BaselineResult
where
    S: std::borrow::Borrow<str> + Ord,
{
    let mut counts = vec![0u64; test.label_inventory().len()];
    for (_, _, token) in test.tokens() {
        counts[token.label] += 1;
    }
    let majority = counts
        .iter()
        .enumerate()
        .max_by(|(ia, ca), (ib, cb)| ca.cmp(cb).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let mut covered = 0u64;
    let mut correct = 0u64;
    for (_, _, token) in test.tokens() {
        if word_set.contains(token.surface.as_str()) {
            covered += 1;
            if token.label == majority {
                correct += 1;
            }
        }
    }
    BaselineResult {
        accuracy: if covered == 0 {
            0.0
        } else {
            correct as f64 / covered as f64
        },
        correct_tokens: correct,
        covered_tokens: covered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_conllu;
    use crate::store::VectorSource;
    use std::collections::BTreeSet;

    fn base_config() -> SynthConfig {
        SynthConfig {
            n_train_sentences: 20,
            n_test_sentences: 10,
            sentence_length: 5,
            vocab_size: 50,
            n_labels: 3,
            dimension: 4,
            zipf_exponent: 1.0,
            abstraction_weight: 0.5,
            noise_sigma: 0.1,
            seed: 1,
        }
    }

    #[test]
    fn pure_abstraction_tokens_equal_prototypes() {
        let config = SynthConfig {
            abstraction_weight: 1.0,
            noise_sigma: 0.0,
            ..base_config()
        };
        let data = generate::<f64>(&config).unwrap();
        // All tokens of a label share one exact vector: the prototype.
        let mut by_label: Vec<Option<Vec<f64>>> = vec![None; config.n_labels];
        for (s, t, token) in data.train.tokens() {
            let v = data.train_store.vector(s, t).unwrap().to_vec();
            match &by_label[token.label] {
                Some(existing) => assert_eq!(existing, &v),
                None => by_label[token.label] = Some(v),
            }
        }
    }

    #[test]
    fn pure_identity_tokens_equal_identity_vectors() {
        let config = SynthConfig {
            abstraction_weight: 0.0,
            noise_sigma: 0.0,
            ..base_config()
        };
        let data = generate::<f64>(&config).unwrap();
        // Same surface ⇒ same exact vector across all three parts: the
        // prototype term is absent and only the identity vector remains.
        let mut by_surface: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
        for (corpus, store) in [
            (&data.train, &data.train_store),
            (&data.tuning, &data.tuning_store),
            (&data.test, &data.test_store),
        ] {
            for (s, t, token) in corpus.tokens() {
                let v = store.vector(s, t).unwrap().to_vec();
                by_surface
                    .entry(token.surface.clone())
                    .and_modify(|e| assert_eq!(e, &v))
                    .or_insert(v);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = base_config();
        let a = generate::<f64>(&config).unwrap();
        let b = generate::<f64>(&config).unwrap();
        assert_eq!(a, b);
        let c = generate::<f64>(&SynthConfig {
            seed: 2,
            ..config
        })
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(generate::<f64>(&SynthConfig {
            abstraction_weight: 1.5,
            ..base_config()
        })
        .is_err());
        assert!(generate::<f64>(&SynthConfig {
            vocab_size: 2,
            n_labels: 3,
            ..base_config()
        })
        .is_err());
        assert!(generate::<f64>(&SynthConfig {
            noise_sigma: -0.1,
            ..base_config()
        })
        .is_err());
        assert!(generate::<f64>(&SynthConfig {
            n_train_sentences: 0,
            ..base_config()
        })
        .is_err());
    }

    #[test]
    fn zipf_frequencies_are_skewed() {
        let config = SynthConfig {
            n_train_sentences: 200,
            sentence_length: 10,
            vocab_size: 100,
            ..base_config()
        };
        let data = generate::<f64>(&config).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for (_, _, token) in data.train.tokens() {
            *counts.entry(token.surface.clone()).or_insert(0usize) += 1;
        }
        let top = counts.get("w0").copied().unwrap_or(0);
        let tail: usize = (90..100)
            .map(|i| counts.get(&format!("w{i}")).copied().unwrap_or(0))
            .sum();
        assert!(top > tail, "top {top} vs tail {tail}");
    }

    #[test]
    fn sentence_shapes_match_config() {
        let config = base_config();
        let data = generate::<f64>(&config).unwrap();
        assert_eq!(data.train.len(), config.n_train_sentences);
        assert_eq!(data.tuning.len(), 2); // 20 / 10
        assert_eq!(data.test.len(), config.n_test_sentences);
        for sentence in data.train.sentences() {
            assert_eq!(sentence.tokens.len(), config.sentence_length);
        }
        assert_eq!(data.train_store.dimension(), config.dimension);
    }

    #[test]
    fn baseline_majority_and_ties() {
        // labels A, A, B over the covered words: majority A -> 2/3
        let text = "\
1\tx\t_\tA\t_\t_\t_\t_\t_\t_
2\ty\t_\tA\t_\t_\t_\t_\t_\t_
3\tz\t_\tB\t_\t_\t_\t_\t_\t_
";
        let corpus = parse_conllu(text.as_bytes()).unwrap();
        let words: BTreeSet<String> =
            ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let result = majority_label_baseline(&corpus, &words);
        assert_eq!(result.covered_tokens, 3);
        assert!((result.accuracy - 2.0 / 3.0).abs() < 1e-15);

        // single-label corpus: accuracy 1
        let text = "1\tx\t_\tA\t_\t_\t_\t_\t_\t_\n2\ty\t_\tA\t_\t_\t_\t_\t_\t_\n";
        let corpus = parse_conllu(text.as_bytes()).unwrap();
        let words: BTreeSet<String> = ["x"].iter().map(|s| s.to_string()).collect();
        assert_eq!(majority_label_baseline(&corpus, &words).accuracy, 1.0);

        // disjoint word set: zero coverage flag
        let words: BTreeSet<String> = ["absent"].iter().map(|s| s.to_string()).collect();
        let result = majority_label_baseline(&corpus, &words);
        assert_eq!(result.accuracy, 0.0);
        assert!(result.zero_coverage());

        // tie between equally frequent labels goes to the lowest id
        let text = "1\tx\t_\tA\t_\t_\t_\t_\t_\t_\n2\ty\t_\tB\t_\t_\t_\t_\t_\t_\n";
        let corpus = parse_conllu(text.as_bytes()).unwrap();
        let words: BTreeSet<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        let result = majority_label_baseline(&corpus, &words);
        // majority is label 0 ("A"): only "x" is correct
        assert!((result.accuracy - 0.5).abs() < 1e-15);
        assert_eq!(result.correct_tokens, 1);
    }
}
