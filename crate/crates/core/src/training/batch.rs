use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::IGNORE_LABEL;
use crate::corpus::{EncodedRecord, PAD_ID};
use crate::model::Inputs;

/// Records padded to a common length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    /// Positions of the records in the input list.
    pub indices: Vec<usize>,
    pub batch: usize,
    pub seq_len: usize,
    pub token_ids: Vec<u32>,
    pub mask: Vec<bool>,
    /// `IGNORE_LABEL` exactly where `mask` is false.
    pub label_ids: Vec<i64>,
    pub active_count: usize,
}

impl Batch {
    pub fn inputs(&self) -> Inputs<'_> {
        Inputs {
            token_ids: &self.token_ids,
            mask: &self.mask,
            batch: self.batch,
            seq_len: self.seq_len,
        }
    }

    /// Number of real tokens in record `i` of the batch.
    pub fn record_len(&self, i: usize) -> usize {
        self.mask[i * self.seq_len..(i + 1) * self.seq_len]
            .iter()
            .filter(|&&m| m)
            .count()
    }
}

fn pad(records: &[EncodedRecord], indices: Vec<usize>) -> Batch {
    let seq_len = indices.iter().map(|&i| records[i].len()).max().unwrap_or(0);
    let n = indices.len() * seq_len;
    let mut token_ids = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    let mut label_ids = Vec::with_capacity(n);
    for &i in &indices {
        let r = &records[i];
        for p in 0..seq_len {
            match (r.token_ids.get(p), r.label_ids.get(p)) {
                (Some(&tok), Some(&label)) => {
                    token_ids.push(tok);
                    mask.push(true);
                    label_ids.push(i64::from(label));
                }
                _ => {
                    token_ids.push(PAD_ID);
                    mask.push(false);
                    label_ids.push(IGNORE_LABEL);
                }
            }
        }
    }
    let active_count = mask.iter().filter(|&&m| m).count();
    Batch {
        batch: indices.len(),
        indices,
        seq_len,
        token_ids,
        mask,
        label_ids,
        active_count,
    }
}

/// Groups records into batches of at most `batch_size`, each padded to its
/// own longest record. With `shuffle`, the order is a seeded permutation.
pub fn make_batches(
    records: &[EncodedRecord],
    batch_size: usize,
    seed: u64,
    shuffle: bool,
) -> Vec<Batch> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    if shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
        .chunks(batch_size.max(1))
        .map(|chunk| pad(records, chunk.to_vec()))
        .collect()
}
