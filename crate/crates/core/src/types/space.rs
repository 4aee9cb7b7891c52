use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{enumerate_types, type_class_log_size, type_of, Caps};
use crate::error::{Error, Result};

/// How a sequence space is partitioned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    /// One class per type; only valid for exchangeable sources.
    Types,
    /// One class per sequence.
    Explicit,
}

/// A set of sequences sharing one probability under every model in play.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeqClass {
    /// Type counts (types tier) or the sequence itself (explicit tier).
    pub label: Vec<u32>,
    pub log2_size: f64,
}

/// A partition of `[0 : k)^n` into [`SeqClass`]es.
#[derive(Clone, Debug)]
pub struct SequenceSpace {
    n: usize,
    alphabet: usize,
    tier: Tier,
    classes: Vec<SeqClass>,
    index: HashMap<Vec<u32>, usize>,
}

impl SequenceSpace {
    pub fn types(n: usize, k: usize, caps: &Caps) -> Result<Self> {
        let classes = enumerate_types(n, k, caps)?
            .into_iter()
            .map(|t| {
                let log2_size = type_class_log_size(&t);
                SeqClass { label: t, log2_size }
            })
            .collect();
        Ok(Self::build(n, k, Tier::Types, classes))
    }

    /// Explicit classes for the given sequences, in the given order.
    pub fn explicit(n: usize, k: usize, seqs: Vec<Vec<u32>>) -> Result<Self> {
        for s in &seqs {
            if s.len() != n || s.iter().any(|&c| c as usize >= k) {
                return Err(Error::precondition(format!("sequence {s:?} is not in [0:{k})^{n}")));
            }
        }
        let classes = seqs.into_iter().map(|label| SeqClass { label, log2_size: 0.0 }).collect();
        Ok(Self::build(n, k, Tier::Explicit, classes))
    }

    /// All `k^n` sequences, indexed in base `k` with the first letter most significant.
    pub fn all_sequences(n: usize, k: usize, caps: &Caps) -> Result<Self> {
        let total = (k as f64).powi(n as i32);
        if total > caps.max_sequences as f64 {
            return Err(Error::cap("sequences", total, caps.max_sequences as f64));
        }
        let seqs = (0..total as u64).map(|i| index_to_sequence(i, n, k)).collect();
        Self::explicit(n, k, seqs)
    }

    fn build(n: usize, k: usize, tier: Tier, classes: Vec<SeqClass>) -> Self {
        let index = classes.iter().enumerate().map(|(i, c)| (c.label.clone(), i)).collect();
        SequenceSpace { n, alphabet: k, tier, classes, index }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn tier(&self) -> Tier {
        self.tier
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[SeqClass] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &SeqClass {
        &self.classes[i]
    }

    pub fn log2_size(&self, i: usize) -> f64 {
        self.classes[i].log2_size
    }

    /// Class containing `seq`, if represented.
    pub fn class_of(&self, seq: &[u32]) -> Option<usize> {
        match self.tier {
            Tier::Types => self.index.get(&type_of(seq, self.alphabet)).copied(),
            Tier::Explicit => self.index.get(seq).copied(),
        }
    }

    /// Type counts of class `i`.
    pub fn type_counts(&self, i: usize) -> Vec<u32> {
        match self.tier {
            Tier::Types => self.classes[i].label.clone(),
            Tier::Explicit => type_of(&self.classes[i].label, self.alphabet),
        }
    }

    /// `log2` of the number of sequences represented.
    pub fn log2_total(&self) -> f64 {
        crate::prob::logspace::sum(self.classes.iter().map(|c| c.log2_size))
    }
}

pub(crate) fn index_to_sequence(mut i: u64, n: usize, k: usize) -> Vec<u32> {
    let mut s = vec![0u32; n];
    for slot in s.iter_mut().rev() {
        *slot = (i % k as u64) as u32;
        i /= k as u64;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_space_covers_all_sequences() {
        let s = SequenceSpace::types(6, 3, &Caps::default()).unwrap();
        assert!((s.log2_total() - 6.0 * 3f64.log2()).abs() < 1e-12);
        assert_eq!(s.class_of(&[0, 1, 2, 2, 2, 0]), s.class_of(&[2, 2, 1, 0, 0, 2]));
    }

    #[test]
    fn explicit_enumeration_order() {
        let s = SequenceSpace::all_sequences(3, 2, &Caps::default()).unwrap();
        assert_eq!(s.class(5).label, vec![1, 0, 1]);
        assert_eq!(s.class_of(&[1, 1, 0]), Some(6));
    }
}
