//! Seen/unseen evaluation and cross-repetition aggregation.
//!
//! Evaluation is token-based: every test-token occurrence counts once. A
//! token contributes to the seen tally iff its surface is in the plan's
//! seen-word set, to the unseen tally iff it is in the unseen-word set, and
//! to neither otherwise; the overall tally covers all evaluated tokens.

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::probe::ProbeModel;
use crate::scalar::Scalar;
use crate::split::SplitPlan;
use crate::store::{StoreMode, VectorSource};

/// Token tallies and accuracies for one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub correct_seen: u64,
    pub total_seen: u64,
    pub correct_unseen: u64,
    pub total_unseen: u64,
    pub correct_all: u64,
    pub total_all: u64,
    pub acc_seen: f64,
    pub acc_unseen: f64,
    pub acc_all: f64,
}

/// Micro-averaged accuracies over repetitions, their gap, and the
/// population standard deviations of the per-run accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_runs: usize,
    pub micro_acc_seen: f64,
    pub micro_acc_unseen: f64,
    pub gap: f64,
    pub std_seen: f64,
    pub std_unseen: f64,
}

/// `correct / total`, defined as 0 for an empty tally.
fn ratio(correct: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

/// Applies the probe to every test token and tallies correctness over the
/// seen-word tokens, the unseen-word tokens and all tokens.
///
/// Contextual stores must cover every test token; static stores may leave
/// tokens uncovered and those are excluded from all tallies.
pub fn evaluate_run<F: Scalar, S: VectorSource<F>>(
    model: &ProbeModel<F>,
    test: &LabeledCorpus,
    test_store: &S,
    plan: &SplitPlan,
) -> Result<RunResult> {
    if let Some(word) = plan.seen_words.intersection(&plan.unseen_words).next() {
        return Err(Error::InvalidInput(format!(
            "word {word:?} is in both the seen and unseen sets"
        )));
    }
    let mut result = RunResult {
        correct_seen: 0,
        total_seen: 0,
        correct_unseen: 0,
        total_unseen: 0,
        correct_all: 0,
        total_all: 0,
        acc_seen: 0.0,
        acc_unseen: 0.0,
        acc_all: 0.0,
    };
    for (sent_id, tok_idx, token) in test.tokens() {
        let vector = match test_store.vector(sent_id, tok_idx) {
            Some(v) => v,
            None if test_store.mode() == StoreMode::Static => continue,
            None => {
                return Err(Error::InvalidInput(format!(
                    "missing vector for test token ({sent_id}, {tok_idx})"
                )))
            }
        };
        let (predicted, _) = model.predict(vector)?;
        let correct = predicted == token.label;
        result.total_all += 1;
        result.correct_all += correct as u64;
        if plan.seen_words.contains(&token.surface) {
            result.total_seen += 1;
            result.correct_seen += correct as u64;
        } else if plan.unseen_words.contains(&token.surface) {
            result.total_unseen += 1;
            result.correct_unseen += correct as u64;
        }
    }
    result.acc_seen = ratio(result.correct_seen, result.total_seen);
    result.acc_unseen = ratio(result.correct_unseen, result.total_unseen);
    result.acc_all = ratio(result.correct_all, result.total_all);
    Ok(result)
}

/// Pools token counts across runs into micro-averaged accuracies and
/// computes population standard deviations of the per-run accuracies.
pub fn aggregate(results: &[RunResult]) -> Result<AggregateReport> {
    if results.is_empty() {
        return Err(Error::InvalidInput("no run results to aggregate".into()));
    }
    let correct_seen: u64 = results.iter().map(|r| r.correct_seen).sum();
    let total_seen: u64 = results.iter().map(|r| r.total_seen).sum();
    let correct_unseen: u64 = results.iter().map(|r| r.correct_unseen).sum();
    let total_unseen: u64 = results.iter().map(|r| r.total_unseen).sum();
    let micro_acc_seen = ratio(correct_seen, total_seen);
    let micro_acc_unseen = ratio(correct_unseen, total_unseen);
    Ok(AggregateReport {
        n_runs: results.len(),
        micro_acc_seen,
        micro_acc_unseen,
        gap: micro_acc_seen - micro_acc_unseen,
        std_seen: population_std(results.iter().map(|r| r.acc_seen)),
        std_unseen: population_std(results.iter().map(|r| r.acc_unseen)),
    })
}

/// The memorization gap: micro-averaged seen accuracy minus unseen
/// accuracy. Positive values signal memorization; near zero means the
/// accuracies transfer to words never seen in training.
pub fn memorization_gap(report: &AggregateReport) -> f64 {
    report.micro_acc_seen - report.micro_acc_unseen
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let variance = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    variance.sqrt()
}

impl AggregateReport {
    /// Full-precision JSON document.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("invalid report JSON: {e}")))
    }

    /// Header of the tab-separated report table.
    pub fn tsv_header() -> &'static str {
        "train_sentences\trepresentation\tclassifier\tacc_seen\tacc_unseen\tdiff\tstd_seen\tstd_unseen"
    }

    /// One tab-separated row with accuracies, gap and standard deviations
    /// as percentage points rounded to one decimal.
    pub fn tsv_row(&self, train_sentences: usize, representation: &str, classifier: &str) -> String {
        format!(
            "{}\t{}\t{}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}",
            train_sentences,
            representation,
            classifier,
            100.0 * self.micro_acc_seen,
            100.0 * self.micro_acc_unseen,
            100.0 * self.gap,
            100.0 * self.std_seen,
            100.0 * self.std_unseen,
        )
    }
}
