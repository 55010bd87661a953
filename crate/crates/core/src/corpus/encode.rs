use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{is_valid_entity_type, CorpusError, LabeledRecord, TagLabel, Vocabulary};

/// Label inventory of a model: `O` first, then `B-T`, `I-T` for each entity
/// type in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<TagLabel>,
}

impl LabelSet {
    pub fn from_types<I, S>(types: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let types: BTreeSet<String> = types.into_iter().map(|t| t.as_ref().to_string()).collect();
        let mut labels = alloc::vec![TagLabel::O];
        for t in types {
            if !is_valid_entity_type(&t) {
                return Err(CorpusError::InvalidTag(t));
            }
            labels.push(TagLabel::B(t.clone()));
            labels.push(TagLabel::I(t));
        }
        Ok(LabelSet { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, label: &TagLabel) -> Option<u32> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|p| p as u32)
    }

    pub fn label(&self, id: u32) -> Option<&TagLabel> {
        self.labels.get(id as usize)
    }

    pub fn labels(&self) -> &[TagLabel] {
        &self.labels
    }

    pub fn entity_types(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().filter_map(|l| match l {
            TagLabel::B(t) => Some(t.as_str()),
            _ => None,
        })
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<TagLabel> {
        ids.iter()
            .map(|&i| self.label(i).cloned().unwrap_or(TagLabel::O))
            .collect()
    }
}

/// Integer form of a record, ready for batching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedRecord {
    pub record_id: String,
    pub token_ids: Vec<u32>,
    pub label_ids: Vec<u32>,
}

impl EncodedRecord {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

pub fn encode(
    record: &LabeledRecord,
    vocab: &Vocabulary,
    labels: &LabelSet,
) -> Result<EncodedRecord, CorpusError> {
    let token_ids = record
        .tokens()
        .iter()
        .map(|t| vocab.id(t.as_str()))
        .collect();
    let label_ids = record
        .labels()
        .iter()
        .map(|l| {
            labels
                .id(l)
                .ok_or_else(|| CorpusError::UnseenTag(l.to_string()))
        })
        .collect::<Result<_, _>>()?;
    Ok(EncodedRecord {
        record_id: record.record_id.clone(),
        token_ids,
        label_ids,
    })
}

pub fn decode_tokens<'v>(ids: &[u32], vocab: &'v Vocabulary) -> Vec<&'v str> {
    ids.iter()
        .map(|&id| vocab.token(id).unwrap_or(super::UNK_TOKEN))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::UNK_ID;

    #[test]
    fn label_set_layout() {
        let ls = LabelSet::from_types(["Drug", "Disease"]).unwrap();
        let names: Vec<String> = ls.labels().iter().map(|l| l.to_string()).collect();
        assert_eq!(names, ["O", "B-Disease", "I-Disease", "B-Drug", "I-Drug"]);
        assert_eq!(ls.id(&TagLabel::inside("Drug")), Some(4));
        assert_eq!(ls.id(&TagLabel::begin("Symptom")), None);
    }

    #[test]
    fn unknown_tokens_become_unk() {
        let vocab = Vocabulary::from_tokens(["a"]).unwrap();
        let ls = LabelSet::from_types(["X"]).unwrap();
        let r = LabeledRecord::from_pairs("r", &[("a", "B-X"), ("zzz", "O")]).unwrap();
        let e = encode(&r, &vocab, &ls).unwrap();
        assert_eq!(e.token_ids, [2, UNK_ID]);
        assert_eq!(e.label_ids, [1, 0]);

        let empty = Vocabulary::default();
        let e = encode(&r, &empty, &ls).unwrap();
        assert!(e.token_ids.iter().all(|&i| i == UNK_ID));
    }

    #[test]
    fn unseen_tag_is_an_error() {
        let r = LabeledRecord::from_pairs("r", &[("a", "B-Y")]).unwrap();
        let ls = LabelSet::from_types(["X"]).unwrap();
        assert_eq!(
            encode(&r, &Vocabulary::default(), &ls).unwrap_err(),
            CorpusError::UnseenTag("B-Y".into())
        );
    }

    #[test]
    fn decode_round_trips_known_tokens() {
        let vocab = Vocabulary::from_tokens(["x", "y"]).unwrap();
        let ls = LabelSet::from_types::<_, &str>([]).unwrap();
        let r = LabeledRecord::from_pairs("r", &[("y", "O"), ("x", "O"), ("y", "O")]).unwrap();
        let e = encode(&r, &vocab, &ls).unwrap();
        assert_eq!(decode_tokens(&e.token_ids, &vocab), ["y", "x", "y"]);
    }
}
