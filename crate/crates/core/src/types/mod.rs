//! Method of types: type and conditional-type enumeration, exact type-class
//! probabilities, and the sequence-space models built on them.
//!
//! A sequence space is a partition of `A^n` into classes of equally likely
//! sequences. For product sources and memoryless channels the classes are
//! type classes, which keeps `n = 50` binary problems to a few thousand
//! numbers. Small problems can also be enumerated sequence by sequence;
//! both tiers answer the same queries.

mod source;
mod space;

pub use source::{ChannelModel, CondRow, ConditionalTable, JointSource, Labeling, MessageAtom};
pub use space::{SeqClass, SequenceSpace, Tier};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::logspace::LogFactorials;
use crate::prob::{Channel, Pmf};

/// Enumeration limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub max_types: u64,
    pub max_sequences: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_types: 10_000_000, max_sequences: 1 << 20 }
    }
}

/// Number of types of length `n` on `k` letters, `C(n+k-1, k-1)`.
pub fn type_count(n: usize, k: usize) -> f64 {
    let mut c = 1.0f64;
    for i in 0..k.saturating_sub(1) {
        c = c * (n + 1 + i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// All compositions of `n` into `k` non-negative parts, lexicographic.
pub fn enumerate_types(n: usize, k: usize, caps: &Caps) -> Result<Vec<Vec<u32>>> {
    let count = type_count(n, k);
    if count > caps.max_types as f64 {
        return Err(Error::cap("types", count, caps.max_types as f64));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = vec![0u32; k];
    compositions(n as u32, 0, &mut cur, &mut out);
    Ok(out)
}

fn compositions(left: u32, i: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if i + 1 == cur.len() {
        cur[i] = left;
        out.push(cur.clone());
        return;
    }
    for c in (0..=left).rev() {
        cur[i] = c;
        compositions(left - c, i + 1, cur, out);
    }
}

/// Joint counts `counts[x][y]` of a pair of sequences.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConditionalType {
    pub counts: Vec<Vec<u32>>,
}

impl ConditionalType {
    /// `V(y|x)` as a channel; rows of unused inputs are uniform.
    pub fn as_channel(&self) -> Channel {
        let ny = self.counts[0].len();
        let rows = self
            .counts
            .iter()
            .map(|r| {
                let s: u32 = r.iter().sum();
                if s == 0 {
                    vec![1.0 / ny as f64; ny]
                } else {
                    r.iter().map(|&c| c as f64 / s as f64).collect()
                }
            })
            .collect();
        Channel::named("conditional-type", rows).expect("valid conditional type")
    }

    pub fn output_counts(&self) -> Vec<u32> {
        let ny = self.counts[0].len();
        (0..ny).map(|y| self.counts.iter().map(|r| r[y]).sum()).collect()
    }
}

/// Every conditional type compatible with the input type `x_type`.
pub fn enumerate_conditional_types(x_type: &[u32], ny: usize, caps: &Caps) -> Result<Vec<ConditionalType>> {
    let count: f64 = x_type.iter().map(|&c| type_count(c as usize, ny)).product();
    if count > caps.max_types as f64 {
        return Err(Error::cap("conditional types", count, caps.max_types as f64));
    }
    let per_row: Vec<Vec<Vec<u32>>> = x_type.iter().map(|&c| enumerate_types(c as usize, ny, caps)).collect::<Result<_>>()?;
    let mut out = vec![ConditionalType { counts: Vec::new() }];
    for rows in &per_row {
        let mut next = Vec::with_capacity(out.len() * rows.len());
        for partial in &out {
            for r in rows {
                let mut c = partial.clone();
                c.counts.push(r.clone());
                next.push(c);
            }
        }
        out = next;
    }
    Ok(out)
}

/// Counts of each letter in `seq`.
pub fn type_of(seq: &[u32], k: usize) -> Vec<u32> {
    let mut t = vec![0u32; k];
    for &s in seq {
        t[s as usize] += 1;
    }
    t
}

/// `log2 |T_t|`.
pub fn type_class_log_size(t: &[u32]) -> f64 {
    let n: u32 = t.iter().sum();
    LogFactorials::new(n as usize).multinomial(t)
}

/// `log2 p^n(x)` for any `x` of type `t`; `-∞` when `t` leaves the support of `p`.
pub fn sequence_log_prob(t: &[u32], p: &Pmf) -> f64 {
    t.iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(b, &c)| if p.prob(b) > 0.0 { c as f64 * p.prob(b).log2() } else { f64::NEG_INFINITY })
        .sum()
}

/// `log2 p^n(T_t)` via the exact multinomial.
pub fn type_class_log_prob(t: &[u32], p: &Pmf) -> f64 {
    let lp = sequence_log_prob(t, p);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    type_class_log_size(t) + lp
}

/// `(n+1)^{-|X||Y|}`, the universal lower bound on `V^n(T_V(x) | x)`.
pub fn conditional_type_class_lower_bound(n: usize, nx: usize, ny: usize) -> f64 {
    ((n + 1) as f64).powf(-((nx * ny) as f64))
}

/// `log2 w^n(T_V(x) | x)` for `x` of the input type implied by `v`.
pub fn conditional_type_class_log_prob(v: &ConditionalType, w: &Channel) -> f64 {
    let n: u32 = v.counts.iter().flatten().sum();
    let lf = LogFactorials::new(n as usize);
    let mut acc = 0.0;
    for (x, row) in v.counts.iter().enumerate() {
        acc += lf.multinomial(row);
        for (y, &c) in row.iter().enumerate() {
            if c > 0 {
                let p = w.get(x, y);
                if p == 0.0 {
                    return f64::NEG_INFINITY;
                }
                acc += c as f64 * p.log2();
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts_match_formula() {
        let caps = Caps::default();
        for (n, k) in [(0, 3), (5, 2), (7, 3), (4, 4)] {
            assert_eq!(enumerate_types(n, k, &caps).unwrap().len() as f64, type_count(n, k));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let caps = Caps { max_types: 10, max_sequences: 16 };
        assert!(matches!(enumerate_types(20, 2, &caps), Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn lower_bound_example() {
        assert_eq!(conditional_type_class_lower_bound(4, 2, 2), 5f64.powi(-4));
    }

    #[test]
    fn type_probabilities_sum_to_one() {
        let p = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let types = enumerate_types(9, 3, &Caps::default()).unwrap();
        let s: f64 = types.iter().map(|t| type_class_log_prob(t, &p).exp2()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_types_partition_outputs() {
        let w = Channel::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.1, 0.8]]).unwrap();
        let vs = enumerate_conditional_types(&[3, 4], 3, &Caps::default()).unwrap();
        let s: f64 = vs.iter().map(|v| conditional_type_class_log_prob(v, &w).exp2()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn type_count_polynomial(n in 0usize..40, k in 1usize..5) {
            prop_assert!(type_count(n, k) <= ((n + 1) as f64).powi(k as i32));
        }

        #[test]
        fn sequence_prob_identity(seed in any::<u64>(), n in 1usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = Pmf::random(&mut rng, 3, 1.0);
            let t = &enumerate_types(n, 3, &Caps::default()).unwrap()[(seed % type_count(n, 3) as u64) as usize];
            let q = Pmf::new(t.iter().map(|&c| c as f64 / n as f64).collect()).unwrap();
            let lhs = sequence_log_prob(t, &p);
            let rhs = -(n as f64) * (q.divergence(&p) + q.entropy());
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn conditional_type_lower_bound_holds(a in 0u32..6, b in 0u32..6, seed in any::<u64>()) {
            prop_assume!(a + b > 0);
            let vs = enumerate_conditional_types(&[a, b], 2, &Caps::default()).unwrap();
            let v = &vs[(seed % vs.len() as u64) as usize];
            let lp = conditional_type_class_log_prob(v, &v.as_channel());
            let n = (a + b) as usize;
            prop_assert!(lp >= conditional_type_class_lower_bound(n, 2, 2).log2() - 1e-12);
        }
    }
}
