//! Crate-wide error type.

use thiserror::Error;

/// Errors produced while parsing corpora, loading vectors, splitting,
/// training or evaluating.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed corpus text; `line` is 1-based within the input stream.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Malformed or inconsistent vector/embedding data; the message names
    /// the offending record.
    #[error("load error: {0}")]
    Load(String),

    /// Argument outside an operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A contract violation: inconsistent inputs, empty required sets,
    /// mismatched dimensions and similar.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },
}

impl Error {
    /// True for numerical failures (as opposed to data/usage problems).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Diverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
