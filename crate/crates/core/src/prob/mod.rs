//! Finite probability primitives: alphabets, pmfs, channels and the
//! divergence family used by every other module.
//!
//! All logarithms are base 2. A zero-probability outcome has spectrum
//! frequency `+∞` (see [`Pmf::surprisal`]).
//!
//! ```
//! use infostab::prob::{Channel, Pmf};
//!
//! let w = Channel::bsc(0.1).unwrap();
//! let p = Pmf::uniform(2);
//! let i = w.mutual_information(&p);
//! assert!((i - (1.0 - infostab::prob::binary_entropy(0.1))).abs() < 1e-12);
//! ```

mod file;
pub mod logspace;

pub use file::{ChannelFile, PmfFile};

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on a row sum before it is rejected.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A finite alphabet `[0 : size)`, optionally labelled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Ok(Alphabet { size, labels: None })
    }

    pub fn labelled(labels: Vec<String>) -> Result<Self> {
        let mut a = Alphabet::new(labels.len())?;
        a.labels = Some(labels);
        Ok(a)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    /// `log2 |A|`.
    pub fn log2_size(&self) -> f64 {
        (self.size as f64).log2()
    }
}

/// A probability mass function on `[0 : len)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Validates non-negativity and `|sum - 1| <= 1e-12`, then renormalizes.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty pmf".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("sums to {sum:.17}")));
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(Pmf { probs })
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be non-negative with positive sum".into()));
        }
        Ok(Pmf { probs: weights.iter().map(|w| w / sum).collect() })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform pmf on empty alphabet");
        Pmf { probs: vec![1.0 / k as f64; k] }
    }

    pub fn point(k: usize, i: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[i] = 1.0;
        Pmf { probs }
    }

    pub fn bernoulli(q: f64) -> Result<Self> {
        Pmf::new(vec![1.0 - q, q])
    }

    /// Draws from a symmetric Dirichlet with the given concentration.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, k: usize, concentration: f64) -> Self {
        let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
        loop {
            let w: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
            if let Ok(p) = Pmf::from_weights(&w) {
                return p;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Spectrum frequency `h(y) = -log2 p(y)`; `+∞` when `p(y) = 0`.
    pub fn surprisal(&self, i: usize) -> f64 {
        surprisal(self.probs[i])
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|p| **p > 0.0).count()
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    /// `D(self || q)`; `+∞` when `self` is not absolutely continuous w.r.t. `q`.
    pub fn divergence(&self, q: &Pmf) -> f64 {
        divergence(&self.probs, &q.probs)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.support().last().copied().unwrap_or(0)
    }
}

/// A discrete memoryless channel `w(y|x)` stored row-wise by input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    name: String,
    rows: Vec<Pmf>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Channel::named("w", rows)
    }

    pub fn named(name: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidChannel("input alphabet needs at least 2 symbols".into()));
        }
        let ny = rows[0].len();
        if ny < 2 {
            return Err(Error::InvalidChannel("output alphabet needs at least 2 symbols".into()));
        }
        let mut pmfs = Vec::with_capacity(rows.len());
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != ny {
                return Err(Error::InvalidChannel(format!("row {x} has {} entries, expected {ny}", row.len())));
            }
            pmfs.push(Pmf::new(row).map_err(|e| Error::InvalidChannel(format!("row {x}: {e}")))?);
        }
        Ok(Channel { name: name.into(), rows: pmfs })
    }

    pub fn bsc(p: f64) -> Result<Self> {
        Channel::named(format!("bsc({p})"), vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Z channel: `0 -> 0` always, `1 -> 0` with probability `p`.
    pub fn z(p: f64) -> Result<Self> {
        Channel::named(format!("z({p})"), vec![vec![1.0, 0.0], vec![p, 1.0 - p]])
    }

    pub fn identity(k: usize) -> Result<Self> {
        let rows = (0..k).map(|x| (0..k).map(|y| if x == y { 1.0 } else { 0.0 }).collect()).collect();
        Channel::named(format!("id({k})"), rows)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, nx: usize, ny: usize, concentration: f64) -> Self {
        let rows = (0..nx).map(|_| Pmf::random(rng, ny, concentration)).collect();
        Channel { name: "random".into(), rows }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &Pmf {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Pmf] {
        &self.rows
    }

    /// `w(y|x)`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x].probs[y]
    }

    /// Output distribution `sum_x p(x) w(.|x)`.
    pub fn output(&self, p: &Pmf) -> Pmf {
        let mut q = vec![0.0; self.outputs()];
        for (x, px) in p.probs().iter().enumerate() {
            for (y, qy) in q.iter_mut().enumerate() {
                *qy += px * self.get(x, y);
            }
        }
        let s: f64 = q.iter().sum();
        Pmf { probs: q.into_iter().map(|v| v / s).collect() }
    }

    /// Cascade `x -> self -> next`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        if self.outputs() != next.inputs() {
            return Err(Error::InvalidChannel("cascade alphabets do not match".into()));
        }
        let rows = (0..self.inputs()).map(|x| next.output(self.row(x)).probs).collect();
        Channel::named(format!("{}>{}", self.name, next.name), rows)
    }

    pub fn mutual_information(&self, p: &Pmf) -> f64 {
        let q = self.output(p);
        p.probs()
            .iter()
            .enumerate()
            .filter(|(_, px)| **px > 0.0)
            .map(|(x, px)| px * self.row(x).divergence(&q))
            .sum()
    }

    /// Conditional divergence `D(self || other | p)`.
    pub fn divergence(&self, other: &Channel, p: &Pmf) -> f64 {
        p.probs()
            .iter()
            .enumerate()
            .filter(|(_, px)| **px > 0.0)
            .map(|(x, px)| px * self.row(x).divergence(other.row(x)))
            .sum()
    }

    /// `D_hat(self || other | p) = sum hat(y|x) p(x) log2(self(y|x) / other(y|x))`.
    ///
    /// Equals `D(hat || other | p) - D(hat || self | p)` when both are finite.
    pub fn directed_divergence(&self, other: &Channel, hat: &Channel, p: &Pmf) -> f64 {
        let mut acc = 0.0;
        for (x, px) in p.probs().iter().enumerate() {
            if *px == 0.0 {
                continue;
            }
            for y in 0..self.outputs() {
                let h = hat.get(x, y);
                if h == 0.0 {
                    continue;
                }
                acc += h * px * (self.get(x, y).log2() - other.get(x, y).log2());
            }
        }
        acc
    }

    /// `max log2(self(y|x) / other(y|x))` over entries with `self(y|x) > 0`.
    pub fn max_log_ratio(&self, other: &Channel) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for x in 0..self.inputs() {
            for y in 0..self.outputs() {
                let a = self.get(x, y);
                if a > 0.0 {
                    m = m.max(a.log2() - other.get(x, y).log2());
                }
            }
        }
        m
    }

    /// `log2 w^n(ys | xs) = sum_i log2 w(y_i | x_i)`; `-∞` on a zero transition.
    pub fn n_fold_log_prob(&self, xs: &[usize], ys: &[usize]) -> f64 {
        assert_eq!(xs.len(), ys.len(), "sequence lengths differ");
        xs.iter().zip(ys).map(|(&x, &y)| self.get(x, y).log2()).sum()
    }
}

/// `-log2 p`, with `+∞` at zero.
pub fn surprisal(p: f64) -> f64 {
    if p > 0.0 {
        -p.log2()
    } else {
        f64::INFINITY
    }
}

pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|v| **v > 0.0).map(|v| -v * v.log2()).sum()
}

pub fn binary_entropy(q: f64) -> f64 {
    entropy(&[q, 1.0 - q])
}

pub fn divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in p.iter().zip(q) {
        if *a > 0.0 {
            if *b == 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).log2();
        }
    }
    acc.max(0.0)
}

/// Mutual information of a joint matrix `joint[u][v]`.
pub fn mutual_information_joint(joint: &[Vec<f64>]) -> f64 {
    let pu: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let k = joint.first().map_or(0, |r| r.len());
    let pv: Vec<f64> = (0..k).map(|v| joint.iter().map(|r| r[v]).sum()).collect();
    let mut acc = 0.0;
    for (u, row) in joint.iter().enumerate() {
        for (v, p) in row.iter().enumerate() {
            if *p > 0.0 {
                acc += p * (p / (pu[u] * pv[v])).log2();
            }
        }
    }
    acc.max(0.0)
}

/// `H(V | U)` of a joint matrix `joint[u][v]`.
pub fn conditional_entropy_joint(joint: &[Vec<f64>]) -> f64 {
    let mut acc = 0.0;
    for row in joint {
        let pu: f64 = row.iter().sum();
        for p in row {
            if *p > 0.0 {
                acc += p * (pu / p).log2();
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
    fn rejects_bad_sum() {
        assert!(Pmf::new(vec![0.5, 0.5 + 2e-12]).is_err());
        assert!(Pmf::new(vec![0.5, 0.5 + 5e-13]).is_ok());
        assert!(Pmf::new(vec![1.2, -0.2]).is_err());
    }

    #[test]
    fn zero_mass_surprisal_is_infinite() {
        let p = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(p.surprisal(1), f64::INFINITY);
        assert_eq!(p.surprisal(0), 0.0);
    }

    #[test]
    fn bsc_capacity_point() {
        let w = Channel::bsc(0.11).unwrap();
        let i = w.mutual_information(&Pmf::uniform(2));
        assert!((i - (1.0 - binary_entropy(0.11))).abs() < 1e-12);
    }

    #[test]
    fn cascade_of_bscs() {
        let w = Channel::bsc(0.1).unwrap().then(&Channel::bsc(0.2).unwrap()).unwrap();
        assert!((w.get(0, 1) - 0.26).abs() < 1e-15);
    }

    #[test]
    fn n_fold_matches_product() {
        let w = Channel::bsc(0.25).unwrap();
        let lp = w.n_fold_log_prob(&[0, 1, 1], &[0, 0, 1]);
        assert!((lp - (0.75f64 * 0.25 * 0.75).log2()).abs() < 1e-14);
        let z = Channel::z(0.3).unwrap();
        assert_eq!(z.n_fold_log_prob(&[0], &[1]), f64::NEG_INFINITY);
    }

    fn channel_strategy(nx: usize, ny: usize) -> impl Strategy<Value = Channel> {
        any::<u64>().prop_map(move |s| Channel::random(&mut ChaCha8Rng::seed_from_u64(s), nx, ny, 1.0))
    }

    proptest! {
        #[test]
        fn directed_divergence_identity(a in channel_strategy(3, 3), b in channel_strategy(3, 3),
                                        hat in channel_strategy(3, 3), seed in any::<u64>()) {
            let p = Pmf::random(&mut ChaCha8Rng::seed_from_u64(seed), 3, 1.0);
            let lhs = a.directed_divergence(&b, &hat, &p);
            let rhs = hat.divergence(&b, &p) - hat.divergence(&a, &p);
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn divergence_nonnegative(a in channel_strategy(2, 4), b in channel_strategy(2, 4), seed in any::<u64>()) {
            let p = Pmf::random(&mut ChaCha8Rng::seed_from_u64(seed), 2, 0.5);
            prop_assert!(a.divergence(&b, &p) >= 0.0);
            prop_assert_eq!(a.divergence(&a, &p), 0.0);
        }

        #[test]
        fn mutual_information_bounded(w in channel_strategy(3, 4), seed in any::<u64>()) {
            let p = Pmf::random(&mut ChaCha8Rng::seed_from_u64(seed), 3, 1.0);
            let i = w.mutual_information(&p);
            prop_assert!(i >= 0.0 && i <= p.entropy() + 1e-12);
        }
    }
}
