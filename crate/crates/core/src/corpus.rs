//! Labeled corpora and CoNLL-U parsing.
//!
//! A corpus is a list of sentences whose tokens carry a surface form and a
//! label id into the corpus label inventory. The parser reads standard
//! 10-column CoNLL-U and uses the UPOS column as the label.

use std::collections::BTreeSet;
use std::io::BufRead;

use crate::error::{Error, Result};

/// One token: its exact surface form and a label id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub label: usize,
}

/// One sentence with a stable 0-based id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: usize,
    pub tokens: Vec<Token>,
}

/// Sentences plus the ordered label inventory their token ids point into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    sentences: Vec<Sentence>,
    label_inventory: Vec<String>,
}

impl LabeledCorpus {
    /// Builds a corpus, validating all structural invariants: contiguous
    /// sentence ids from 0, non-empty sentences and surfaces, distinct
    /// inventory entries, and label ids within the inventory.
    pub fn new(sentences: Vec<Sentence>, label_inventory: Vec<String>) -> Result<Self> {
        let mut seen_labels = BTreeSet::new();
        for label in &label_inventory {
            if !seen_labels.insert(label.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate label {label:?} in inventory"
                )));
            }
        }
        for (expected_id, sentence) in sentences.iter().enumerate() {
            if sentence.id != expected_id {
                return Err(Error::InvalidInput(format!(
                    "sentence id {} at position {expected_id}; ids must be contiguous from 0",
                    sentence.id
                )));
            }
            if sentence.tokens.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "sentence {} has no tokens",
                    sentence.id
                )));
            }
            for token in &sentence.tokens {
                if token.surface.is_empty() {
                    return Err(Error::InvalidInput(format!(
                        "empty surface form in sentence {}",
                        sentence.id
                    )));
                }
                if token.label >= label_inventory.len() {
                    return Err(Error::InvalidInput(format!(
                        "label id {} out of range (inventory size {}) in sentence {}",
                        token.label,
                        label_inventory.len(),
                        sentence.id
                    )));
                }
            }
        }
        Ok(Self {
            sentences,
            label_inventory,
        })
    }

    /// Empty corpus with an empty inventory.
    pub fn empty() -> Self {
        Self {
            sentences: Vec::new(),
            label_inventory: Vec::new(),
        }
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn label_inventory(&self) -> &[String] {
        &self.label_inventory
    }

    /// Number of sentences.
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }

    /// Iterates `(sentence_id, token_index, token)` in corpus order.
    pub fn tokens(&self) -> impl Iterator<Item = (usize, usize, &Token)> {
        self.sentences
            .iter()
            .flat_map(|s| s.tokens.iter().enumerate().map(move |(i, t)| (s.id, i, t)))
    }

    /// The set of distinct surface forms (exact, case-sensitive).
    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.tokens().map(|(_, _, t)| t.surface.as_str()).collect()
    }

    /// New corpus containing the selected sentences, reindexed to
    /// contiguous ids starting at 0. `ids` must be strictly increasing and
    /// within range. The label inventory is kept as-is so label ids stay
    /// comparable with the parent corpus.
    pub fn subset(&self, ids: &[usize]) -> Result<LabeledCorpus> {
        let mut sentences = Vec::with_capacity(ids.len());
        let mut previous: Option<usize> = None;
        for (new_id, &id) in ids.iter().enumerate() {
            if let Some(p) = previous {
                if id <= p {
                    return Err(Error::InvalidInput(format!(
                        "subset ids must be strictly increasing; got {id} after {p}"
                    )));
                }
            }
            previous = Some(id);
            let sentence = self.sentences.get(id).ok_or_else(|| {
                Error::InvalidInput(format!("subset id {id} out of range ({} sentences)", self.len()))
            })?;
            sentences.push(Sentence {
                id: new_id,
                tokens: sentence.tokens.clone(),
            });
        }
        Ok(LabeledCorpus {
            sentences,
            label_inventory: self.label_inventory.clone(),
        })
    }

    /// Rewrites every token label id against `inventory`. Every label string
    /// used by this corpus must be present in the target inventory.
    pub fn remap_labels(&self, inventory: &[String]) -> Result<LabeledCorpus> {
        let mut mapping = Vec::with_capacity(self.label_inventory.len());
        for label in &self.label_inventory {
            let target = inventory.iter().position(|l| l == label).ok_or_else(|| {
                Error::InvalidInput(format!("label {label:?} missing from target inventory"))
            })?;
            mapping.push(target);
        }
        let sentences = self
            .sentences
            .iter()
            .map(|s| Sentence {
                id: s.id,
                tokens: s
                    .tokens
                    .iter()
                    .map(|t| Token {
                        surface: t.surface.clone(),
                        label: mapping[t.label],
                    })
                    .collect(),
            })
            .collect();
        LabeledCorpus::new(sentences, inventory.to_vec())
    }
}

/// Parses CoNLL-U text: one sentence per block of non-blank lines, blocks
/// separated by blank lines. Comment lines (starting with `#`), multiword
/// range lines (ids like `1-2`) and empty-node lines (ids like `1.1`) are
/// skipped. The UPOS column (column 4) becomes the token label; the label
/// inventory is built in first-occurrence order.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<LabeledCorpus> {
    let mut sentences = Vec::new();
    let mut label_inventory: Vec<String> = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    // True when the current block contained at least one line (even if all
    // were comments); used to reject blocks without any token line.
    let mut block_has_lines = false;
    let mut block_start_line = 0usize;

    let flush = |current: &mut Vec<Token>,
                     block_has_lines: &mut bool,
                     block_start_line: usize,
                     sentences: &mut Vec<Sentence>|
     -> Result<()> {
        if *block_has_lines {
            if current.is_empty() {
                return Err(Error::Parse {
                    line: block_start_line,
                    message: "sentence block contains no token lines".into(),
                });
            }
            sentences.push(Sentence {
                id: sentences.len(),
                tokens: std::mem::take(current),
            });
        }
        *block_has_lines = false;
        Ok(())
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: format!("i/o error: {e}"),
        })?;
        if line.trim().is_empty() {
            flush(&mut current, &mut block_has_lines, block_start_line, &mut sentences)?;
            continue;
        }
        if !block_has_lines {
            block_has_lines = true;
            block_start_line = line_no;
        }
        if line.starts_with('#') {
            continue;
        }
        let columns: Vec<&str> = line.split('\t').collect();
        if columns.len() != 10 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", columns.len()),
            });
        }
        let id_col = columns[0];
        // Multiword token ranges ("1-2") and empty nodes ("1.1") carry no
        // probed label of their own.
        if id_col.contains('-') || id_col.contains('.') {
            continue;
        }
        if id_col.parse::<usize>().is_err() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("invalid token id {id_col:?}"),
            });
        }
        let surface = columns[1];
        if surface.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty surface form".into(),
            });
        }
        let upos = columns[3];
        let label = match label_inventory.iter().position(|l| l == upos) {
            Some(i) => i,
            None => {
                label_inventory.push(upos.to_string());
                label_inventory.len() - 1
            }
        };
        current.push(Token {
            surface: surface.to_string(),
            label,
        });
    }
    flush(&mut current, &mut block_has_lines, block_start_line, &mut sentences)?;

    LabeledCorpus::new(sentences, label_inventory)
}

/// Serializes a corpus to canonical CoNLL-U: token lines only, ids starting
/// at 1 within each sentence, UPOS in column 4, `_` elsewhere, sentences
/// separated by blank lines. Reparsing the output reproduces the corpus.
pub fn write_conllu(corpus: &LabeledCorpus) -> String {
    let mut out = String::new();
    for (i, sentence) in corpus.sentences().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (j, token) in sentence.tokens.iter().enumerate() {
            let upos = &corpus.label_inventory()[token.label];
            out.push_str(&format!(
                "{}\t{}\t_\t{}\t_\t_\t_\t_\t_\t_\n",
                j + 1,
                token.surface,
                upos
            ));
        }
    }
    out
}
