//! Labeled token sequences: ingestion, BIO validation, de-identification,
//! splitting, vocabulary construction and encoding.

mod bio;
mod conll;
mod deid;
mod encode;
mod split;
mod synthetic;
mod vocab;

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

pub use bio::{spans_from_labels, validate_bio, BioMode};
pub use conll::{parse_conll, parse_token_blocks, write_conll};
pub use deid::{deidentify, deidentify_token};
pub use encode::{decode_tokens, encode, EncodedRecord, LabelSet};
pub use split::{split, SplitOutput, SplitSpec, SplitWarning};
pub use synthetic::{gen_synthetic, SyntheticSpec, MAX_SYNTHETIC_TYPES};
pub use vocab::{build_vocab, Vocabulary, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("empty file")]
    EmptyFile,
    #[error("line {line}: malformed line, expected `token<TAB>tag`")]
    MalformedLine { line: usize },
    #[error("line {line}: unparseable tag `{tag}`")]
    BadTag { line: usize, tag: String },
    #[error("line {line}: invalid token {token:?}")]
    BadToken { line: usize, token: String },
    #[error("invalid token {0:?}: tokens are non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("unparseable tag `{0}`")]
    InvalidTag(String),
    #[error("record `{record_id}`: {tokens} tokens but {labels} labels")]
    LengthMismatch {
        record_id: String,
        tokens: usize,
        labels: usize,
    },
    #[error("record `{0}` has no tokens")]
    EmptyRecord(String),
    #[error("duplicate record id `{0}`")]
    DuplicateRecordId(String),
    #[error("invalid BIO sequence at token {index}: `{label}` does not continue an entity of the same type")]
    InvalidBio { index: usize, label: String },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("unseen tag `{0}`")]
    UnseenTag(String),
    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),
    #[error("invalid sizes: {0}")]
    InvalidSizes(String),
}

/// One whitespace-free unit of text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, CorpusError> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(CorpusError::InvalidToken(text));
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Position of a tag within the BIO scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Position {
    B,
    I,
    O,
}

/// A BIO tag. `B` and `I` carry the entity type; `O` carries none.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TagLabel {
    O,
    B(String),
    I(String),
}

/// `[A-Za-z][A-Za-z0-9_]*`
pub fn is_valid_entity_type(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl TagLabel {
    pub fn begin(entity_type: &str) -> Self {
        TagLabel::B(entity_type.to_string())
    }

    pub fn inside(entity_type: &str) -> Self {
        TagLabel::I(entity_type.to_string())
    }

    pub fn position(&self) -> Position {
        match self {
            TagLabel::O => Position::O,
            TagLabel::B(_) => Position::B,
            TagLabel::I(_) => Position::I,
        }
    }

    pub fn entity_type(&self) -> Option<&str> {
        match self {
            TagLabel::O => None,
            TagLabel::B(t) | TagLabel::I(t) => Some(t),
        }
    }
}

impl fmt::Display for TagLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagLabel::O => f.write_str("O"),
            TagLabel::B(t) => write!(f, "B-{t}"),
            TagLabel::I(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for TagLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(TagLabel::O);
        }
        let bad = || CorpusError::InvalidTag(s.to_string());
        let (prefix, ty) = s.split_once('-').ok_or_else(bad)?;
        if !is_valid_entity_type(ty) {
            return Err(bad());
        }
        match prefix {
            "B" => Ok(TagLabel::B(ty.to_string())),
            "I" => Ok(TagLabel::I(ty.to_string())),
            _ => Err(bad()),
        }
    }
}

/// Token span `[start, end)` carrying one entity type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, entity_type: impl Into<String>) -> Self {
        debug_assert!(start < end);
        EntitySpan {
            start,
            end,
            entity_type: entity_type.into(),
        }
    }
}

/// One record: tokens with aligned BIO labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledRecord {
    pub record_id: String,
    tokens: Vec<Token>,
    labels: Vec<TagLabel>,
}

impl LabeledRecord {
    pub fn new(
        record_id: impl Into<String>,
        tokens: Vec<Token>,
        labels: Vec<TagLabel>,
    ) -> Result<Self, CorpusError> {
        let record_id = record_id.into();
        if tokens.len() != labels.len() {
            return Err(CorpusError::LengthMismatch {
                record_id,
                tokens: tokens.len(),
                labels: labels.len(),
            });
        }
        if tokens.is_empty() {
            return Err(CorpusError::EmptyRecord(record_id));
        }
        Ok(LabeledRecord {
            record_id,
            tokens,
            labels,
        })
    }

    /// Convenience constructor from `(token, tag)` string pairs.
    pub fn from_pairs(record_id: &str, pairs: &[(&str, &str)]) -> Result<Self, CorpusError> {
        let mut tokens = Vec::with_capacity(pairs.len());
        let mut labels = Vec::with_capacity(pairs.len());
        for (tok, tag) in pairs {
            tokens.push(Token::new(*tok)?);
            labels.push(tag.parse()?);
        }
        LabeledRecord::new(record_id, tokens, labels)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn labels(&self) -> &[TagLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Replaces the label sequence, keeping the length invariant.
    pub fn with_labels(&self, labels: Vec<TagLabel>) -> Result<Self, CorpusError> {
        LabeledRecord::new(self.record_id.clone(), self.tokens.clone(), labels)
    }

    pub(crate) fn tokens_mut(&mut self) -> &mut [Token] {
        &mut self.tokens
    }
}

/// An ordered collection of records with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    records: Vec<LabeledRecord>,
    label_inventory: BTreeSet<String>,
}

impl Corpus {
    pub fn new(records: Vec<LabeledRecord>) -> Result<Self, CorpusError> {
        let mut ids = BTreeSet::new();
        let mut label_inventory = BTreeSet::new();
        for r in &records {
            if !ids.insert(r.record_id.as_str()) {
                return Err(CorpusError::DuplicateRecordId(r.record_id.clone()));
            }
            for l in r.labels() {
                if let Some(t) = l.entity_type() {
                    label_inventory.insert(t.to_string());
                }
            }
        }
        Ok(Corpus {
            records,
            label_inventory,
        })
    }

    pub fn records(&self) -> &[LabeledRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<LabeledRecord> {
        self.records
    }

    pub fn label_inventory(&self) -> &BTreeSet<String> {
        &self.label_inventory
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_tokens(&self) -> usize {
        self.records.iter().map(LabeledRecord::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn tag_parsing() {
        assert_eq!("O".parse::<TagLabel>().unwrap(), TagLabel::O);
        assert_eq!(
            "B-Drug".parse::<TagLabel>().unwrap(),
            TagLabel::begin("Drug")
        );
        assert_eq!(
            "I-Drug_2".parse::<TagLabel>().unwrap(),
            TagLabel::inside("Drug_2")
        );
        for bad in ["", "B", "B-", "X-Drug", "B-1Drug", "o", "B-Dr ug", "O-Drug"] {
            assert!(bad.parse::<TagLabel>().is_err(), "{bad}");
        }
        assert_eq!(TagLabel::inside("Dis").to_string(), "I-Dis");
    }

    #[test]
    fn token_rejects_whitespace() {
        assert!(Token::new("").is_err());
        assert!(Token::new("a b").is_err());
        assert!(Token::new("a\tb").is_err());
        assert!(Token::new("mg").is_ok());
    }

    #[test]
    fn record_and_corpus_invariants() {
        let t = || vec![Token::new("a").unwrap()];
        assert!(matches!(
            LabeledRecord::new("x", t(), vec![]),
            Err(CorpusError::LengthMismatch { .. })
        ));
        assert!(matches!(
            LabeledRecord::new("x", vec![], vec![]),
            Err(CorpusError::EmptyRecord(_))
        ));
        let r = LabeledRecord::from_pairs("x", &[("a", "B-Drug"), ("b", "O")]).unwrap();
        let err = Corpus::new(vec![r.clone(), r.clone()]).unwrap_err();
        assert_eq!(err, CorpusError::DuplicateRecordId("x".into()));
        let c = Corpus::new(vec![r]).unwrap();
        assert_eq!(c.label_inventory().iter().collect::<Vec<_>>(), vec!["Drug"]);
    }
}
