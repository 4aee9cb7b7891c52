//! Spectrum slicing of a source by its spectrum frequency `h(y) = -log2 p(y)`.
//!
//! Slice `s < t` holds the outcomes with `s*lambda <= h(y) < (s+1)*lambda`;
//! slice `t` collects everything with `h(y) >= t*lambda`. Zero-probability
//! outcomes belong to no slice.
//!
//! ```
//! use infostab::prob::Pmf;
//! use infostab::spectrum::{Slicing, SpectrumSource};
//!
//! let p = Pmf::new(vec![0.5, 0.25, 0.125, 0.125]).unwrap();
//! let sl = Slicing::build(&SpectrumSource::from_pmf(&p), 1.0, 4).unwrap();
//! assert_eq!(sl.assignment(), &[Some(1), Some(2), Some(3), Some(3)]);
//! ```

mod image;
mod quasi;
pub(crate) mod tau;
mod transfer;

pub use image::{image_ratio_check, min_image_bruteforce, ImageRatioReport, ImageResult};
pub use quasi::{min_quasi_image, verify_slice_union, QuasiImage, SliceUnionCertificate, Uniqueness};
pub use tau::{tau_bound, TauBound};
pub use transfer::{quasi_to_image_transfer, TransferReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::logspace;
use crate::prob::Pmf;
use crate::types::SequenceSpace;

/// Slack, in bits, for inequalities between accumulated log-domain sums.
pub const LOG_SLACK: f64 = 1e-9;

/// A class of equally likely outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumAtom {
    /// Spectrum frequency of each member.
    pub h: f64,
    pub log2_count: f64,
    /// Total mass of the class.
    pub mass: f64,
}

/// Input to [`Slicing::build`].
#[derive(Clone, Debug)]
pub enum SpectrumSource {
    Exact { atoms: Vec<SpectrumAtom>, log2_outcomes: f64 },
    /// Spectrum frequencies of iid draws; cardinalities are unknown.
    Sampled { h: Vec<f64>, log2_outcomes: f64 },
}

impl SpectrumSource {
    pub fn from_pmf(p: &Pmf) -> Self {
        let atoms = p.probs().iter().map(|&q| SpectrumAtom { h: crate::prob::surprisal(q), log2_count: 0.0, mass: q }).collect();
        SpectrumSource::Exact { atoms, log2_outcomes: (p.len() as f64).log2() }
    }

    /// From class log-masses over a sequence space.
    pub fn from_classes(log2_mass: &[f64], space: &SequenceSpace) -> Self {
        let atoms = log2_mass
            .iter()
            .zip(space.classes())
            .map(|(&lm, c)| SpectrumAtom {
                h: if lm == f64::NEG_INFINITY { f64::INFINITY } else { c.log2_size - lm },
                log2_count: c.log2_size,
                mass: lm.exp2(),
            })
            .collect();
        SpectrumSource::Exact { atoms, log2_outcomes: space.n() as f64 * (space.alphabet() as f64).log2() }
    }

    pub fn atoms(&self) -> Option<&[SpectrumAtom]> {
        match self {
            SpectrumSource::Exact { atoms, .. } => Some(atoms),
            SpectrumSource::Sampled { .. } => None,
        }
    }

    pub fn log2_outcomes(&self) -> f64 {
        match self {
            SpectrumSource::Exact { log2_outcomes, .. } | SpectrumSource::Sampled { log2_outcomes, .. } => *log2_outcomes,
        }
    }
}

/// `t = ceil(2 n log2|Y| / lambda)`, the catch-all index for a plain slicing.
pub fn default_t(lambda: f64, n: usize, ny: usize) -> u32 {
    (2.0 * n as f64 * (ny as f64).log2() / lambda).ceil().max(1.0) as u32
}

/// Slice index of a finite spectrum frequency; the membership law holds in
/// floating point as evaluated.
pub fn slice_index(h: f64, lambda: f64, t: u32) -> u32 {
    let mut s = (h / lambda).floor().max(0.0);
    while s > 0.0 && s * lambda > h {
        s -= 1.0;
    }
    while (s + 1.0) * lambda <= h && s < t as f64 {
        s += 1.0;
    }
    (s as u32).min(t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Slice {
    pub s: u32,
    pub mass: f64,
    /// `log2 |S_s|`; `-∞` for an empty slice, NaN when sampled.
    pub log2_card: f64,
    /// `-log2 p(S_s)`.
    pub varrho: f64,
    /// Mass of slices `0..=s`.
    pub eta: f64,
}

/// Result of slicing a source.
#[derive(Clone, Debug, Serialize)]
pub struct Slicing {
    lambda: f64,
    t: u32,
    slices: Vec<Slice>,
    assignment: Vec<Option<u32>>,
    log2_outcomes: f64,
}

impl Slicing {
    pub fn build(source: &SpectrumSource, lambda: f64, t: u32) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() || t == 0 {
            return Err(Error::precondition(format!("slicing needs lambda > 0 and t >= 1, got {lambda} and {t}")));
        }
        let k = t as usize + 1;
        let mut mass = vec![0.0; k];
        let mut card = vec![f64::NEG_INFINITY; k];
        let assignment: Vec<Option<u32>> = match source {
            SpectrumSource::Exact { atoms, .. } => atoms
                .iter()
                .map(|a| {
                    (a.mass > 0.0 && a.h.is_finite()).then(|| {
                        let s = slice_index(a.h, lambda, t);
                        mass[s as usize] += a.mass;
                        card[s as usize] = logspace::add(card[s as usize], a.log2_count);
                        s
                    })
                })
                .collect(),
            SpectrumSource::Sampled { h, .. } => {
                let w = 1.0 / h.len().max(1) as f64;
                card = vec![f64::NAN; k];
                h.iter()
                    .map(|&v| {
                        v.is_finite().then(|| {
                            let s = slice_index(v, lambda, t);
                            mass[s as usize] += w;
                            s
                        })
                    })
                    .collect()
            }
        };
        let mut eta = 0.0;
        let slices = (0..k)
            .map(|s| {
                eta += mass[s];
                Slice { s: s as u32, mass: mass[s], log2_card: card[s], varrho: crate::prob::surprisal(mass[s]), eta }
            })
            .collect();
        Ok(Slicing { lambda, t, slices, assignment, log2_outcomes: source.log2_outcomes() })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn slice(&self, s: u32) -> &Slice {
        &self.slices[s as usize]
    }

    /// Slice of each atom, `None` for zero-mass atoms.
    pub fn assignment(&self) -> &[Option<u32>] {
        &self.assignment
    }

    /// Atoms whose spectrum frequency breaks the membership law of their slice.
    pub fn membership_violations(&self, source: &SpectrumSource) -> usize {
        let hs: Vec<f64> = match source {
            SpectrumSource::Exact { atoms, .. } => atoms.iter().map(|a| a.h).collect(),
            SpectrumSource::Sampled { h, .. } => h.clone(),
        };
        hs.iter()
            .zip(&self.assignment)
            .filter(|(h, s)| match s {
                None => h.is_finite() && matches!(source, SpectrumSource::Sampled { .. }),
                Some(s) => {
                    let lo = *s as f64 * self.lambda;
                    if *s < self.t {
                        !(lo <= **h && **h < (*s as f64 + 1.0) * self.lambda)
                    } else {
                        !(lo <= **h)
                    }
                }
            })
            .count()
    }

    /// Cardinality sandwich per non-empty slice.
    pub fn cardinality_checks(&self) -> Vec<CardinalityCheck> {
        let lam = self.lambda;
        self.slices
            .iter()
            .filter(|sl| sl.mass > 0.0 && !sl.log2_card.is_nan())
            .map(|sl| {
                let s = sl.s as f64;
                let lower = s * lam - sl.varrho;
                let (upper, applicable) = if sl.s < self.t {
                    ((s + 1.0) * lam - sl.varrho, true)
                } else {
                    ((s + 1.0) * lam, self.t as f64 > self.log2_outcomes / lam)
                };
                CardinalityCheck {
                    s: sl.s,
                    log2_card: sl.log2_card,
                    lower,
                    upper,
                    lower_holds: lower <= sl.log2_card + LOG_SLACK,
                    upper_holds: !applicable || sl.log2_card < upper + LOG_SLACK,
                    upper_applicable: applicable,
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CardinalityCheck {
    pub s: u32,
    pub log2_card: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub upper_applicable: bool,
}

/// Pointwise check of `h(y|u) >= h(y) + log2 p_U(u)` on a joint table
/// `joint[u][y]`; returns the number of violating cells.
pub fn conditioning_violations(joint: &[Vec<f64>]) -> usize {
    let ny = joint.first().map_or(0, |r| r.len());
    let py: Vec<f64> = (0..ny).map(|y| joint.iter().map(|r| r[y]).sum()).collect();
    let mut bad = 0;
    for row in joint {
        let pu: f64 = row.iter().sum();
        if pu == 0.0 {
            continue;
        }
        for (y, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let h_cond = -(p / pu).log2();
            let rhs = -py[y].log2() + pu.log2();
            if h_cond < rhs - LOG_SLACK {
                bad += 1;
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dyadic_example() {
        let p = Pmf::new(vec![0.5, 0.25, 0.125, 0.125, 0.0]).unwrap();
        let sl = Slicing::build(&SpectrumSource::from_pmf(&p), 1.0, 3).unwrap();
        assert_eq!(sl.assignment(), &[Some(1), Some(2), Some(3), Some(3), None]);
        assert_eq!(sl.slice(3).mass, 0.25);
        assert!((sl.slice(3).log2_card - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_lambda() {
        let p = Pmf::uniform(3);
        assert!(Slicing::build(&SpectrumSource::from_pmf(&p), 0.0, 3).is_err());
        assert!(Slicing::build(&SpectrumSource::from_pmf(&p), 1.0, 0).is_err());
    }

    #[test]
    fn boundary_values_land_in_upper_slice() {
        for k in 1..200u32 {
            let lam = 0.1 * k as f64 / 7.0;
            for s in 0..20u32 {
                let h = s as f64 * lam;
                let idx = slice_index(h, lam, 50);
                assert!(idx as f64 * lam <= h && h < (idx as f64 + 1.0) * lam);
            }
        }
    }

    proptest! {
        #[test]
        fn slice_laws(seed in any::<u64>(), k in 2usize..40, lam in 0.1f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = Pmf::random(&mut rng, k, 0.7);
            let src = SpectrumSource::from_pmf(&p);
            let sl = Slicing::build(&src, lam, default_t(lam, 1, k)).unwrap();
            prop_assert_eq!(sl.membership_violations(&src), 0);
            for c in sl.cardinality_checks() {
                prop_assert!(c.lower_holds && c.upper_holds, "{:?}", c);
            }
            prop_assert!((sl.slices().last().unwrap().eta - 1.0).abs() < 1e-12);
        }

        #[test]
        fn conditioning_inequality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let flat = Pmf::random(&mut rng, 12, 0.5);
            let joint: Vec<Vec<f64>> = flat.probs().chunks(4).map(|c| c.to_vec()).collect();
            prop_assert_eq!(conditioning_violations(&joint), 0);
        }
    }
}
