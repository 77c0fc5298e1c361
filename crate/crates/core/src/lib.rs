//! Measuring how much a word-level probing classifier memorizes word
//! identities instead of generalizing from the representations.
//!
//! The toolkit splits the probe's training sentences into two random
//! halves, trains only on one, and compares test accuracy on words
//! exclusive to the trained half (*seen words*) against words exclusive to
//! the held-out half (*unseen words*). The two sets are sampled
//! symmetrically, so a persistent accuracy gap between them quantifies
//! memorization rather than vocabulary frequency effects.
//!
//! Numeric code is generic over the scalar type ([`Scalar`]: `f32` or
//! `f64`); concrete aliases for both precisions live at the crate root.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod probe;
pub mod scalar;
pub mod split;
pub mod store;
pub mod synth;
pub mod train;

pub use corpus::{parse_conllu, write_conllu, LabeledCorpus, Sentence, Token};
pub use error::{Error, Result};
pub use eval::{aggregate, evaluate_run, memorization_gap, AggregateReport, RunResult};
pub use probe::{loss_and_gradient, LinearProbe, Matrix, MlpProbe, ProbeGradient, ProbeKind, ProbeModel};
pub use scalar::Scalar;
pub use split::{
    empirical_selection_frequency, sample_split, selection_probability,
    selection_probability_approx, SplitPlan, WordOccurrenceIndex,
};
pub use store::{RepresentationStore, StoreMode, VectorSource};
pub use synth::{generate, majority_label_baseline, BaselineResult, SynthConfig, SynthData};
pub use train::{token_accuracy, train_probe, TrainConfig};

/// Double-precision aliases (the usual working types).
pub type RepresentationStore64 = RepresentationStore<f64>;
pub type ProbeModel64 = ProbeModel<f64>;
pub type LinearProbe64 = LinearProbe<f64>;
pub type MlpProbe64 = MlpProbe<f64>;
pub type TrainConfig64 = TrainConfig<f64>;
pub type SynthData64 = SynthData<f64>;

/// Single-precision aliases.
pub type RepresentationStore32 = RepresentationStore<f32>;
pub type ProbeModel32 = ProbeModel<f32>;
pub type LinearProbe32 = LinearProbe<f32>;
pub type MlpProbe32 = MlpProbe<f32>;
pub type TrainConfig32 = TrainConfig<f32>;
pub type SynthData32 = SynthData<f32>;
