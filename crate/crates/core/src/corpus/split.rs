use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Corpus, CorpusError};

/// Train/validation/test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.70,
            val_frac: 0.15,
            test_frac: 0.15,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec {
            seed,
            ..SplitSpec::default()
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(CorpusError::InvalidSplit(format!(
                "fractions must lie in [0, 1], got {fracs:?}"
            )));
        }
        let total: f64 = fracs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidSplit(format!(
                "fractions sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Partition sizes for `n` records: `round(n*train)`, `round(n*val)`,
    /// remainder to test. Rounding is half away from zero.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize), CorpusError> {
        self.validate()?;
        let n_train = libm::round(n as f64 * self.train_frac) as usize;
        let n_val = libm::round(n as f64 * self.val_frac) as usize;
        if n_train == 0 {
            return Err(CorpusError::InvalidSplit(format!(
                "train partition would be empty for {n} records"
            )));
        }
        if n_train + n_val > n {
            return Err(CorpusError::InvalidSplit(format!(
                "rounded train ({n_train}) + val ({n_val}) exceed {n} records"
            )));
        }
        Ok((n_train, n_val, n - n_train - n_val))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitWarning {
    EmptyValidation,
    EmptyTest,
}

impl core::fmt::Display for SplitWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SplitWarning::EmptyValidation => f.write_str("validation partition is empty"),
            SplitWarning::EmptyTest => f.write_str("test partition is empty"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutput {
    pub train: Corpus,
    pub val: Corpus,
    pub test: Corpus,
    pub warnings: Vec<SplitWarning>,
}

/// Seeded shuffle, then whole-record partition in shuffled order.
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<SplitOutput, CorpusError> {
    let n = corpus.len();
    if n < 3 {
        return Err(CorpusError::InvalidSplit(format!(
            "need at least 3 records, got {n}"
        )));
    }
    let (n_train, n_val, n_test) = spec.sizes(n)?;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let take =
        |idx: &[usize]| Corpus::new(idx.iter().map(|&i| corpus.records()[i].clone()).collect());
    let train = take(&order[..n_train])?;
    let val = take(&order[n_train..n_train + n_val])?;
    let test = take(&order[n_train + n_val..])?;

    let mut warnings = Vec::new();
    if n_val == 0 && spec.val_frac > 0.0 {
        warnings.push(SplitWarning::EmptyValidation);
    }
    if n_test == 0 && spec.test_frac > 0.0 {
        warnings.push(SplitWarning::EmptyTest);
    }
    Ok(SplitOutput {
        train,
        val,
        test,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabeledRecord;
    use alloc::collections::BTreeSet;
    use alloc::string::{String, ToString};

    fn corpus(n: usize) -> Corpus {
        Corpus::new(
            (0..n)
                .map(|i| LabeledRecord::from_pairs(&i.to_string(), &[("w", "O")]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn ids(c: &Corpus) -> Vec<String> {
        c.records().iter().map(|r| r.record_id.clone()).collect()
    }

    #[test]
    fn default_sizes() {
        let out = split(&corpus(100), &SplitSpec::default()).unwrap();
        assert_eq!(
            (out.train.len(), out.val.len(), out.test.len()),
            (70, 15, 15)
        );
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn three_records_leave_validation_empty() {
        // round(2.1) = 2, round(0.45) = 0, remainder 1
        let out = split(&corpus(3), &SplitSpec::default()).unwrap();
        assert_eq!((out.train.len(), out.val.len(), out.test.len()), (2, 0, 1));
        assert_eq!(out.warnings, [SplitWarning::EmptyValidation]);
    }

    #[test]
    fn partitions_are_exhaustive_and_deterministic() {
        let c = corpus(37);
        let a = split(&c, &SplitSpec::with_seed(9)).unwrap();
        let b = split(&c, &SplitSpec::with_seed(9)).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<String> = ids(&a.train);
        all.extend(ids(&a.val));
        all.extend(ids(&a.test));
        let set: BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(all.len(), 37);
        assert_eq!(set.len(), 37);
        let other = split(&c, &SplitSpec::with_seed(10)).unwrap();
        assert_ne!(ids(&a.train), ids(&other.train));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(split(&corpus(2), &SplitSpec::default()).is_err());
        let bad_sum = SplitSpec {
            train_frac: 0.5,
            val_frac: 0.2,
            test_frac: 0.2,
            seed: 0,
        };
        assert!(split(&corpus(10), &bad_sum).is_err());
        let no_train = SplitSpec {
            train_frac: 0.1,
            val_frac: 0.45,
            test_frac: 0.45,
            seed: 0,
        };
        assert!(split(&corpus(3), &no_train).is_err());
        let overflow = SplitSpec {
            train_frac: 0.5,
            val_frac: 0.5,
            test_frac: 0.0,
            seed: 0,
        };
        assert!(split(&corpus(3), &overflow).is_err());
    }
}
