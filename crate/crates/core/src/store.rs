//! Per-token representation vectors.
//!
//! A store holds one vector per corpus token, either loaded per token
//! (contextual mode) or broadcast from per-type embeddings (static mode).
//! Rows live in one flat buffer; static mode shares a single row between
//! all tokens of a word type, which makes the equal-surface ⇒ equal-vector
//! invariant hold bit-exactly by construction.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How the vectors were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreMode {
    /// One independent vector per token occurrence.
    Contextual,
    /// One vector per word type, shared by all its token occurrences.
    /// Tokens of types without an embedding have no vector.
    Static,
}

/// Read access to token vectors. Train/eval code goes through this trait so
/// tests can interpose wrappers (e.g. access loggers).
pub trait VectorSource<F> {
    fn dimension(&self) -> usize;
    fn mode(&self) -> StoreMode;
    /// The vector for `(sentence_id, token_index)`, or `None` when the token
    /// has no representation (possible only in static mode).
    fn vector(&self, sentence_id: usize, token_index: usize) -> Option<&[F]>;
}

/// Token-aligned vector storage for one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationStore<F> {
    dimension: usize,
    mode: StoreMode,
    /// Per sentence, per token: row index into `data`, if any.
    index: Vec<Vec<Option<usize>>>,
    /// Row-major rows of length `dimension`.
    data: Vec<F>,
}

impl<F: Scalar> RepresentationStore<F> {
    /// Builds a contextual store from one vector per token, in corpus shape.
    pub fn from_vectors(
        dimension: usize,
        vectors: Vec<Vec<Vec<F>>>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let mut index = Vec::with_capacity(vectors.len());
        let mut data = Vec::new();
        for (sent_id, sentence) in vectors.into_iter().enumerate() {
            let mut row_ids = Vec::with_capacity(sentence.len());
            for (tok_idx, vector) in sentence.into_iter().enumerate() {
                if vector.len() != dimension {
                    return Err(Error::Load(format!(
                        "vector for sentence {sent_id} token {tok_idx} has {} components, expected {dimension}",
                        vector.len()
                    )));
                }
                if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Load(format!(
                        "non-finite component {bad} for sentence {sent_id} token {tok_idx}"
                    )));
                }
                row_ids.push(Some(data.len() / dimension));
                data.extend_from_slice(&vector);
            }
            index.push(row_ids);
        }
        Ok(Self {
            dimension,
            mode: StoreMode::Contextual,
            index,
            data,
        })
    }

    /// Loads per-token vectors in the text format
    /// `SENT_ID TOKEN_INDEX v1 ... vd` (space-separated, 0-based indices).
    /// Exactly one record per corpus token is required; the dimension is
    /// inferred from the first record and enforced afterwards.
    pub fn load_token_vectors<R: BufRead>(reader: R, corpus: &LabeledCorpus) -> Result<Self> {
        let shape: Vec<usize> = corpus.sentences().iter().map(|s| s.tokens.len()).collect();
        let mut index: Vec<Vec<Option<usize>>> =
            shape.iter().map(|&n| vec![None; n]).collect();
        let mut data: Vec<F> = Vec::new();
        let mut dimension = 0usize;
        let mut records = 0usize;

        for (line_idx, line) in reader.lines().enumerate() {
            let line_no = line_idx + 1;
            let line = line.map_err(|e| Error::Load(format!("line {line_no}: i/o error: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let sent_id = parse_index(fields.next(), "sentence id", line_no)?;
            let tok_idx = parse_index(fields.next(), "token index", line_no)?;
            let slot = index
                .get_mut(sent_id)
                .and_then(|s| s.get_mut(tok_idx))
                .ok_or_else(|| {
                    Error::Load(format!(
                        "record at line {line_no} names token ({sent_id}, {tok_idx}) absent from the corpus"
                    ))
                })?;
            if slot.is_some() {
                return Err(Error::Load(format!(
                    "duplicate record for token ({sent_id}, {tok_idx}) at line {line_no}"
                )));
            }
            let vector = parse_components::<F>(fields, line_no)?;
            if records == 0 {
                if vector.is_empty() {
                    return Err(Error::Load(format!(
                        "record at line {line_no} has no vector components"
                    )));
                }
                dimension = vector.len();
            } else if vector.len() != dimension {
                return Err(Error::Load(format!(
                    "record for token ({sent_id}, {tok_idx}) at line {line_no} has {} components, expected {dimension}",
                    vector.len()
                )));
            }
            *slot = Some(data.len() / dimension.max(1));
            data.extend_from_slice(&vector);
            records += 1;
        }

        let expected = corpus.token_count();
        if records != expected {
            let missing = index
                .iter()
                .enumerate()
                .flat_map(|(s, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, v)| v.is_none())
                        .map(move |(t, _)| format!("({s}, {t})"))
                })
                .take(3)
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::Load(format!(
                "{records} records for {expected} corpus tokens; first missing: {missing}"
            )));
        }
        if expected == 0 {
            dimension = 1; // degenerate but keeps the invariant d >= 1
        }
        Ok(Self {
            dimension,
            mode: StoreMode::Contextual,
            index,
            data,
        })
    }

    /// Loads per-type embeddings in the text format `SURFACE v1 ... vd` and
    /// broadcasts each type's vector to all its token occurrences. Returns
    /// the store and the sorted list of corpus surfaces that had no entry.
    pub fn load_type_embeddings<R: BufRead>(
        reader: R,
        corpus: &LabeledCorpus,
    ) -> Result<(Self, Vec<String>)> {
        let mut rows: BTreeMap<String, usize> = BTreeMap::new();
        let mut data: Vec<F> = Vec::new();
        let mut dimension = 0usize;

        for (line_idx, line) in reader.lines().enumerate() {
            let line_no = line_idx + 1;
            let line = line.map_err(|e| Error::Load(format!("line {line_no}: i/o error: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let surface = fields
                .next()
                .ok_or_else(|| Error::Load(format!("line {line_no}: missing surface form")))?
                .to_string();
            let vector = parse_components::<F>(fields, line_no)?;
            if rows.is_empty() {
                if vector.is_empty() {
                    return Err(Error::Load(format!(
                        "entry {surface:?} at line {line_no} has no vector components"
                    )));
                }
                dimension = vector.len();
            } else if vector.len() != dimension {
                return Err(Error::Load(format!(
                    "entry {surface:?} at line {line_no} has {} components, expected {dimension}",
                    vector.len()
                )));
            }
            match rows.entry(surface) {
                Entry::Occupied(e) => {
                    return Err(Error::Load(format!(
                        "duplicate entry {:?} at line {line_no}",
                        e.key()
                    )));
                }
                Entry::Vacant(e) => {
                    e.insert(data.len() / dimension);
                    data.extend_from_slice(&vector);
                }
            }
        }
        if dimension == 0 {
            dimension = 1;
        }

        let mut missing = BTreeMap::new();
        let mut index = Vec::with_capacity(corpus.len());
        for sentence in corpus.sentences() {
            let mut row_ids = Vec::with_capacity(sentence.tokens.len());
            for token in &sentence.tokens {
                match rows.get(&token.surface) {
                    Some(&row) => row_ids.push(Some(row)),
                    None => {
                        missing.insert(token.surface.clone(), ());
                        row_ids.push(None);
                    }
                }
            }
            index.push(row_ids);
        }
        Ok((
            Self {
                dimension,
                mode: StoreMode::Static,
                index,
                data,
            },
            missing.into_keys().collect(),
        ))
    }

    /// New store covering the selected sentences, reindexed like
    /// [`LabeledCorpus::subset`].
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        let mut index = Vec::with_capacity(ids.len());
        let mut previous: Option<usize> = None;
        for &id in ids {
            if let Some(p) = previous {
                if id <= p {
                    return Err(Error::InvalidInput(format!(
                        "subset ids must be strictly increasing; got {id} after {p}"
                    )));
                }
            }
            previous = Some(id);
            let row = self.index.get(id).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "subset id {id} out of range ({} sentences)",
                    self.index.len()
                ))
            })?;
            index.push(row.clone());
        }
        // Rows stay shared in `data`; only the sentence index shrinks.
        Ok(Self {
            dimension: self.dimension,
            mode: self.mode,
            index,
            data: self.data.clone(),
        })
    }

    /// Serializes a complete store back to the token-vector text format,
    /// printing each component in its shortest round-trippable form.
    pub fn write_token_vectors(&self, corpus: &LabeledCorpus) -> Result<String> {
        let mut out = String::new();
        for (sent_id, tok_idx, _) in corpus.tokens() {
            let vector = self.vector(sent_id, tok_idx).ok_or_else(|| {
                Error::Load(format!(
                    "no vector for token ({sent_id}, {tok_idx}); cannot serialize"
                ))
            })?;
            write!(out, "{sent_id} {tok_idx}").unwrap();
            for v in vector {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Number of stored rows.
    pub fn row_count(&self) -> usize {
        self.data.len() / self.dimension.max(1)
    }
}

impl<F: Scalar> VectorSource<F> for RepresentationStore<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn mode(&self) -> StoreMode {
        self.mode
    }

    fn vector(&self, sentence_id: usize, token_index: usize) -> Option<&[F]> {
        let row = (*self.index.get(sentence_id)?.get(token_index)?)?;
        let start = row * self.dimension;
        Some(&self.data[start..start + self.dimension])
    }
}

fn parse_index(field: Option<&str>, what: &str, line_no: usize) -> Result<usize> {
    let field = field.ok_or_else(|| Error::Load(format!("line {line_no}: missing {what}")))?;
    field
        .parse::<usize>()
        .map_err(|_| Error::Load(format!("line {line_no}: invalid {what} {field:?}")))
}

fn parse_components<'a, F: Scalar>(
    fields: impl Iterator<Item = &'a str>,
    line_no: usize,
) -> Result<Vec<F>> {
    let mut vector = Vec::new();
    for field in fields {
        let value: F = field
            .parse()
            .map_err(|_| Error::Load(format!("line {line_no}: invalid component {field:?}")))?;
        if !value.is_finite() {
            return Err(Error::Load(format!(
                "line {line_no}: non-finite component {field:?}"
            )));
        }
        vector.push(value);
    }
    Ok(vector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_conllu;

    fn corpus(text: &str) -> LabeledCorpus {
        parse_conllu(text.as_bytes()).unwrap()
    }

    fn two_sentence_corpus() -> LabeledCorpus {
        corpus(
            "1\tcat\t_\tNOUN\t_\t_\t_\t_\t_\t_\n2\tsat\t_\tVERB\t_\t_\t_\t_\t_\t_\n\n\
             1\tcat\t_\tNOUN\t_\t_\t_\t_\t_\t_\n",
        )
    }

    #[test]
    fn loads_minimal_token_vector_file() {
        let c = corpus("1\ta\t_\tX\t_\t_\t_\t_\t_\t_\n");
        let store =
            RepresentationStore::<f64>::load_token_vectors("0 0 0.5 -1.0".as_bytes(), &c).unwrap();
        assert_eq!(store.dimension(), 2);
        assert_eq!(store.mode(), StoreMode::Contextual);
        assert_eq!(store.vector(0, 0).unwrap(), &[0.5, -1.0]);
    }

    #[test]
    fn record_count_mismatch_is_an_error() {
        let c = two_sentence_corpus();
        let err = RepresentationStore::<f64>::load_token_vectors("0 0 1.0".as_bytes(), &c)
            .unwrap_err();
        assert!(err.to_string().contains("3 corpus tokens"), "{err}");
    }

    #[test]
    fn duplicate_unknown_and_nonfinite_records_rejected() {
        let c = two_sentence_corpus();
        let dup = "0 0 1\n0 0 2\n0 1 3\n1 0 4\n";
        assert!(RepresentationStore::<f64>::load_token_vectors(dup.as_bytes(), &c).is_err());
        let unknown = "0 0 1\n0 1 2\n5 0 3\n";
        let err = RepresentationStore::<f64>::load_token_vectors(unknown.as_bytes(), &c)
            .unwrap_err()
            .to_string();
        assert!(err.contains("(5, 0)"), "{err}");
        let dim = "0 0 1 2\n0 1 3\n1 0 4 5\n";
        assert!(RepresentationStore::<f64>::load_token_vectors(dim.as_bytes(), &c).is_err());
        let nan = "0 0 nan\n0 1 1\n1 0 2\n";
        assert!(RepresentationStore::<f64>::load_token_vectors(nan.as_bytes(), &c).is_err());
    }

    #[test]
    fn token_vector_fixture_round_trips_bit_exactly() {
        let c = corpus(
            "1\ta\t_\tX\t_\t_\t_\t_\t_\t_\n2\tb\t_\tY\t_\t_\t_\t_\t_\t_\n\n\
             1\tc\t_\tX\t_\t_\t_\t_\t_\t_\n",
        );
        let fixture = "0 0 0.5 -1.25 3 0.1\n0 1 -0.0625 2 7.5 -3\n1 0 0.0001 0.30000000000000004 -2.5 4\n";
        let store =
            RepresentationStore::<f64>::load_token_vectors(fixture.as_bytes(), &c).unwrap();
        assert_eq!(store.dimension(), 4);
        assert_eq!(store.write_token_vectors(&c).unwrap(), fixture);
    }

    #[test]
    fn static_store_broadcasts_by_surface() {
        let c = two_sentence_corpus();
        let (store, missing) =
            RepresentationStore::<f64>::load_type_embeddings("cat 1 0\nsat 0 1".as_bytes(), &c)
                .unwrap();
        assert_eq!(store.mode(), StoreMode::Static);
        assert!(missing.is_empty());
        // "cat" occurs in both sentences and maps to the identical row.
        let a = store.vector(0, 0).unwrap();
        let b = store.vector(1, 0).unwrap();
        assert_eq!(a.as_ptr(), b.as_ptr());
        assert_eq!(a, &[1.0, 0.0]);
    }

    #[test]
    fn missing_surfaces_are_reported_not_fatal() {
        let c = two_sentence_corpus();
        let (store, missing) =
            RepresentationStore::<f64>::load_type_embeddings("cat 1 0".as_bytes(), &c).unwrap();
        assert_eq!(missing, vec!["sat".to_string()]);
        assert!(store.vector(0, 1).is_none());
        assert!(store.vector(1, 0).is_some());
    }

    #[test]
    fn duplicate_surface_rejected() {
        let c = two_sentence_corpus();
        let err = RepresentationStore::<f64>::load_type_embeddings(
            "cat 1 0\ncat 0 1".as_bytes(),
            &c,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn subset_keeps_rows_aligned() {
        let c = corpus(
            "1\ta\t_\tX\t_\t_\t_\t_\t_\t_\n\n1\tb\t_\tX\t_\t_\t_\t_\t_\t_\n\n\
             1\tc\t_\tX\t_\t_\t_\t_\t_\t_\n",
        );
        let store = RepresentationStore::<f64>::load_token_vectors(
            "0 0 1\n1 0 2\n2 0 3\n".as_bytes(),
            &c,
        )
        .unwrap();
        let sub = store.subset(&[0, 2]).unwrap();
        assert_eq!(sub.vector(0, 0).unwrap(), &[1.0]);
        assert_eq!(sub.vector(1, 0).unwrap(), &[3.0]);
        assert!(sub.vector(2, 0).is_none());
    }

    #[test]
    fn from_vectors_validates_shape_and_finiteness() {
        let ok = RepresentationStore::from_vectors(2, vec![vec![vec![1.0, 2.0]]]).unwrap();
        assert_eq!(ok.vector(0, 0).unwrap(), &[1.0, 2.0]);
        assert!(RepresentationStore::from_vectors(2, vec![vec![vec![1.0]]]).is_err());
        assert!(
            RepresentationStore::from_vectors(1, vec![vec![vec![f64::INFINITY]]]).is_err()
        );
    }
}
