//! Seeded generator of clinical-style labeled records.
//!
//! Each entity type owns a disjoint slice of the word list and filler words
//! own another, so gold labels follow from the words themselves. Every
//! mention (1-3 tokens) is followed by a filler word, which keeps B/I
//! boundaries recoverable from left context.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_valid_entity_type, Corpus, CorpusError, LabeledRecord, TagLabel, Token};

/// Upper bound on entity types so each keeps >= 5% of tokens in expectation.
pub const MAX_SYNTHETIC_TYPES: usize = 8;

/// Probability that a free slot starts a mention. Each slot then emits a
/// mention (mean length 2) plus a filler word, or just a filler word, so the
/// expected entity share is 2p / (1 + 2p) = 1/2.
const MENTION_START_PROB: f64 = 0.5;
const MAX_MENTION_LEN: usize = 3;

const FILLER_STEMS: &[&str] = &[
    "patient",
    "noted",
    "with",
    "history",
    "of",
    "presented",
    "denies",
    "reports",
    "on",
    "admission",
    "started",
    "given",
    "for",
    "and",
    "the",
    "was",
    "stable",
    "follow",
    "up",
    "after",
    "daily",
    "since",
    "prior",
    "exam",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub n_records: usize,
    pub entity_types: Vec<String>,
    pub vocab_size: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: String| Err(CorpusError::InvalidSizes(msg));
        if self.n_records == 0 {
            return bad("n_records must be >= 1".into());
        }
        if self.entity_types.is_empty() {
            return bad("at least one entity type is required".into());
        }
        if self.entity_types.len() > MAX_SYNTHETIC_TYPES {
            return bad(format!(
                "at most {MAX_SYNTHETIC_TYPES} entity types are supported"
            ));
        }
        for (i, t) in self.entity_types.iter().enumerate() {
            if !is_valid_entity_type(t) {
                return bad(format!("entity type {t:?} is not [A-Za-z][A-Za-z0-9_]*"));
            }
            if self.entity_types[..i].contains(t) {
                return bad(format!("entity type {t:?} listed twice"));
            }
        }
        if self.vocab_size < 20 {
            return bad(format!("vocab_size must be >= 20, got {}", self.vocab_size));
        }
        if self.vocab_size / 2 < 2 * self.entity_types.len() {
            return bad(format!(
                "vocab_size {} too small for {} entity types",
                self.vocab_size,
                self.entity_types.len()
            ));
        }
        if self.max_len == 0 {
            return bad("max_len must be >= 1".into());
        }
        Ok(())
    }
}

struct WordLists {
    filler: Vec<String>,
    by_type: Vec<Vec<String>>,
}

fn word_lists(spec: &SyntheticSpec) -> WordLists {
    let n_filler = spec.vocab_size / 2;
    let per_type = (spec.vocab_size - n_filler) / spec.entity_types.len();
    let filler = (0..n_filler)
        .map(|i| {
            let stem = FILLER_STEMS[i % FILLER_STEMS.len()];
            match i / FILLER_STEMS.len() {
                0 => stem.to_string(),
                k => format!("{stem}{k}"),
            }
        })
        .collect();
    let by_type = spec
        .entity_types
        .iter()
        .map(|t| {
            let stem = t.to_ascii_lowercase();
            (0..per_type).map(|j| format!("{stem}_{j}")).collect()
        })
        .collect();
    WordLists { filler, by_type }
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Corpus, CorpusError> {
    spec.validate()?;
    let words = word_lists(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let min_len = spec.max_len.div_ceil(2);

    let mut records = Vec::with_capacity(spec.n_records);
    for ordinal in 1..=spec.n_records {
        let len = rng.gen_range(min_len..=spec.max_len);
        let mut tokens = Vec::with_capacity(len);
        let mut labels = Vec::with_capacity(len);
        while tokens.len() < len {
            let room = len - tokens.len();
            if rng.gen_bool(MENTION_START_PROB) {
                let ty = rng.gen_range(0..spec.entity_types.len());
                let mention = rng.gen_range(1..=MAX_MENTION_LEN).min(room);
                let name = &spec.entity_types[ty];
                for k in 0..mention {
                    let list = &words.by_type[ty];
                    tokens.push(list[rng.gen_range(0..list.len())].clone());
                    labels.push(if k == 0 {
                        TagLabel::B(name.clone())
                    } else {
                        TagLabel::I(name.clone())
                    });
                }
                if tokens.len() == len {
                    break;
                }
            }
            tokens.push(words.filler[rng.gen_range(0..words.filler.len())].clone());
            labels.push(TagLabel::O);
        }
        let tokens = tokens
            .into_iter()
            .map(Token::new)
            .collect::<Result<Vec<_>, _>>()?;
        records.push(LabeledRecord::new(
            format!("syn-{ordinal:06}"),
            tokens,
            labels,
        )?);
    }
    Corpus::new(records)
}
