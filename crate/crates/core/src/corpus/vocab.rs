use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Corpus, CorpusError, Token};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<PAD>";
pub const UNK_TOKEN: &str = "<UNK>";

/// Token <-> id map. Ids are contiguous; 0 and 1 are reserved for padding
/// and unknown tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    by_id: Vec<String>,
    by_token: BTreeMap<String, u32>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            by_id: alloc::vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()],
            by_token: BTreeMap::new(),
        }
    }
}

impl Vocabulary {
    /// Builds from the ordinary (non-reserved) entries, in id order from 2.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::default();
        for tok in tokens {
            let tok = tok.into();
            if tok == PAD_TOKEN || tok == UNK_TOKEN {
                return Err(CorpusError::InvalidVocab(format!(
                    "reserved token {tok} used as an ordinary entry"
                )));
            }
            Token::new(tok.as_str())
                .map_err(|_| CorpusError::InvalidVocab(format!("invalid token {tok:?}")))?;
            let id = vocab.by_id.len() as u32;
            if vocab.by_token.insert(tok.clone(), id).is_some() {
                return Err(CorpusError::InvalidVocab(format!(
                    "duplicate token {tok:?}"
                )));
            }
            vocab.by_id.push(tok);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Unknown tokens (including literal reserved strings) map to `UNK_ID`.
    pub fn id(&self, token: &str) -> u32 {
        self.by_token.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.by_id.get(id as usize).map(String::as_str)
    }

    /// Entries past the two reserved ids.
    pub fn ordinary_tokens(&self) -> impl Iterator<Item = &str> {
        self.by_id[2..].iter().map(String::as_str)
    }

    /// One token per line, line number = id.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for tok in &self.by_id {
            out.push_str(tok);
            out.push('\n');
        }
        out
    }

    pub fn from_file_str(text: &str) -> Result<Self, CorpusError> {
        let mut lines = text.lines();
        if lines.next() != Some(PAD_TOKEN) || lines.next() != Some(UNK_TOKEN) {
            return Err(CorpusError::InvalidVocab(format!(
                "lines 0 and 1 must be {PAD_TOKEN} and {UNK_TOKEN}"
            )));
        }
        Vocabulary::from_tokens(lines)
    }
}

/// Frequency-ranked vocabulary from the training split: tokens seen at least
/// `min_freq` times, most frequent first, ties lexicographic, at most
/// `max_size` entries including the reserved two.
pub fn build_vocab(train: &Corpus, min_freq: usize, max_size: usize) -> Vocabulary {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in train.records() {
        for t in r.tokens() {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(tok, c)| c >= min_freq.max(1) && tok != PAD_TOKEN && tok != UNK_TOKEN)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size.saturating_sub(2));
    Vocabulary::from_tokens(ranked.into_iter().map(|(t, _)| t))
        .expect("counted tokens are unique and valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabeledRecord;

    fn corpus(tokens: &[&str]) -> Corpus {
        let pairs: Vec<(&str, &str)> = tokens.iter().map(|t| (*t, "O")).collect();
        Corpus::new(alloc::vec![LabeledRecord::from_pairs("r", &pairs).unwrap()]).unwrap()
    }

    fn entries(v: &Vocabulary) -> Vec<&str> {
        (0..v.len() as u32).map(|i| v.token(i).unwrap()).collect()
    }

    #[test]
    fn min_freq_filters() {
        let v = build_vocab(&corpus(&["a", "b", "a", "a"]), 2, 100);
        assert_eq!(entries(&v), [PAD_TOKEN, UNK_TOKEN, "a"]);
    }

    #[test]
    fn empty_corpus_keeps_reserved() {
        let v = build_vocab(&Corpus::default(), 1, 100);
        assert_eq!(entries(&v), [PAD_TOKEN, UNK_TOKEN]);
    }

    #[test]
    fn ties_are_lexicographic_and_truncation_applies() {
        let v = build_vocab(&corpus(&["b", "a", "b", "a", "c"]), 1, 100);
        assert_eq!(entries(&v), [PAD_TOKEN, UNK_TOKEN, "a", "b", "c"]);
        let v = build_vocab(&corpus(&["b", "a", "b", "a", "c"]), 1, 3);
        assert_eq!(entries(&v), [PAD_TOKEN, UNK_TOKEN, "a"]);
    }

    #[test]
    fn reserved_strings_in_text_are_unknown() {
        let v = build_vocab(&corpus(&["<PAD>", "x"]), 1, 10);
        assert_eq!(entries(&v), [PAD_TOKEN, UNK_TOKEN, "x"]);
        assert_eq!(v.id("<PAD>"), UNK_ID);
        assert_eq!(v.id("x"), 2);
    }

    #[test]
    fn file_format() {
        let v = Vocabulary::from_tokens(["a", "b"]).unwrap();
        let text = v.to_file_string();
        assert_eq!(text, "<PAD>\n<UNK>\na\nb\n");
        assert_eq!(Vocabulary::from_file_str(&text).unwrap(), v);
        assert!(Vocabulary::from_file_str("a\nb\n").is_err());
        assert!(Vocabulary::from_file_str("<PAD>\n<UNK>\na\na\n").is_err());
    }
}
