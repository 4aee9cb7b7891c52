use serde::Serialize;

use super::{Slicing, SpectrumAtom, LOG_SLACK};
use crate::error::{Error, Result};
use crate::prob::logspace;

/// A minimum-cardinality set of mass at least `eta`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasiImage {
    pub log2_card: f64,
    pub mass: f64,
    /// Atoms taken whole, most probable first.
    pub whole: Vec<usize>,
    /// An atom taken in part, with the number of members used.
    pub partial: Option<(usize, f64)>,
}

impl QuasiImage {
    pub fn card(&self) -> f64 {
        self.log2_card.exp2().round()
    }
}

fn order(atoms: &[SpectrumAtom]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..atoms.len()).filter(|&i| atoms[i].mass > 0.0 && atoms[i].h.is_finite()).collect();
    idx.sort_by(|&a, &b| atoms[a].h.total_cmp(&atoms[b].h).then(a.cmp(&b)));
    idx
}

/// Greedy by descending probability; exact for the minimum cardinality.
pub fn min_quasi_image(atoms: &[SpectrumAtom], eta: f64) -> Result<QuasiImage> {
    // Masses summed in floating point may exceed 1 by rounding.
    if !(eta > 0.0 && eta <= 1.0 + 1e-12) {
        return Err(Error::precondition(format!("quasi-image mass {eta} not in (0, 1]")));
    }
    let mut cum = 0.0;
    let mut log2_card = f64::NEG_INFINITY;
    let mut whole = Vec::new();
    for i in order(atoms) {
        let a = atoms[i];
        if cum + a.mass >= eta && a.log2_count > 0.0 {
            let per = (a.mass.log2() - a.log2_count).exp2();
            let k = ((eta - cum) / per).ceil().max(1.0).min(a.log2_count.exp2());
            if k < a.log2_count.exp2() {
                return Ok(QuasiImage {
                    log2_card: logspace::add(log2_card, k.log2()),
                    mass: cum + k * per,
                    whole,
                    partial: Some((i, k)),
                });
            }
        }
        cum += a.mass;
        log2_card = logspace::add(log2_card, a.log2_count);
        whole.push(i);
        if cum >= eta {
            return Ok(QuasiImage { log2_card, mass: cum, whole, partial: None });
        }
    }
    if eta - cum <= crate::prob::ROW_SUM_TOL {
        return Ok(QuasiImage { log2_card, mass: cum, whole, partial: None });
    }
    Err(Error::precondition(format!("total mass {cum} is below {eta}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Uniqueness {
    Unique,
    NotUnique,
    /// Equal probabilities straddle the union boundary.
    Indeterminate,
}

/// Whether the union of slices `0..=s` is the unique minimum `eta_s`-quasi
/// image, and the cardinality sandwich for it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceUnionCertificate {
    pub s: u32,
    pub eta_s: f64,
    pub log2_union_card: f64,
    pub log2_min_card: f64,
    pub is_minimum: bool,
    pub uniqueness: Uniqueness,
    /// `s*lambda + lambda + log2(t+1)`.
    pub upper: f64,
    /// `s*lambda + log2 p(S_s)`.
    pub lower: f64,
    pub upper_holds: bool,
    pub lower_holds: bool,
}

pub fn verify_slice_union(atoms: &[SpectrumAtom], slicing: &Slicing, s: u32) -> Result<SliceUnionCertificate> {
    if s > slicing.t() {
        return Err(Error::precondition(format!("slice {s} beyond t = {}", slicing.t())));
    }
    let inside = |i: usize| slicing.assignment()[i].is_some_and(|v| v <= s);
    let mut eta_s = 0.0;
    let mut log2_union_card = f64::NEG_INFINITY;
    let mut max_h_in = f64::NEG_INFINITY;
    let mut min_h_out = f64::INFINITY;
    for i in order(atoms) {
        if inside(i) {
            eta_s += atoms[i].mass;
            log2_union_card = logspace::add(log2_union_card, atoms[i].log2_count);
            max_h_in = max_h_in.max(atoms[i].h);
        } else {
            min_h_out = min_h_out.min(atoms[i].h);
        }
    }
    let lam = slicing.lambda();
    let sl = slicing.slice(s);
    let upper = s as f64 * lam + lam + ((slicing.t() + 1) as f64).log2();
    let lower = s as f64 * lam + sl.mass.log2();
    if eta_s == 0.0 {
        return Ok(SliceUnionCertificate {
            s,
            eta_s,
            log2_union_card,
            log2_min_card: f64::NEG_INFINITY,
            is_minimum: true,
            uniqueness: Uniqueness::Unique,
            upper,
            lower,
            upper_holds: true,
            lower_holds: true,
        });
    }
    let q = min_quasi_image(atoms, eta_s)?;
    let uniqueness = if max_h_in < min_h_out {
        Uniqueness::Unique
    } else if max_h_in == min_h_out {
        Uniqueness::Indeterminate
    } else {
        Uniqueness::NotUnique
    };
    Ok(SliceUnionCertificate {
        s,
        eta_s,
        log2_union_card,
        log2_min_card: q.log2_card,
        is_minimum: q.log2_card >= log2_union_card - LOG_SLACK,
        uniqueness,
        upper,
        lower,
        upper_holds: q.log2_card < upper + LOG_SLACK,
        lower_holds: q.log2_card >= lower - LOG_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::super::SpectrumSource;
    use super::*;
    use crate::prob::Pmf;
    use crate::types::{Caps, SequenceSpace};

    #[test]
    fn greedy_small() {
        let p = Pmf::new(vec![0.1, 0.4, 0.2, 0.3]).unwrap();
        let src = SpectrumSource::from_pmf(&p);
        let q = min_quasi_image(src.atoms().unwrap(), 0.65).unwrap();
        assert_eq!(q.whole, vec![1, 3]);
        assert_eq!(q.card(), 2.0);
        assert!(min_quasi_image(src.atoms().unwrap(), 0.0).is_err());
    }

    #[test]
    fn partial_class() {
        let caps = Caps::default();
        let space = SequenceSpace::types(10, 2, &caps).unwrap();
        let lm: Vec<f64> = space.classes().iter().map(|c| crate::types::type_class_log_prob(&c.label, &Pmf::uniform(2))).collect();
        let src = SpectrumSource::from_classes(&lm, &space);
        let q = min_quasi_image(src.atoms().unwrap(), 0.5).unwrap();
        assert_eq!(q.card(), 512.0);
    }

    #[test]
    fn uniform_union_is_unique() {
        let p = Pmf::new(vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        let src = SpectrumSource::from_pmf(&p);
        let sl = Slicing::build(&src, 2.0, 2).unwrap();
        let c = verify_slice_union(src.atoms().unwrap(), &sl, 1).unwrap();
        assert_eq!(c.uniqueness, Uniqueness::Unique);
        assert!(c.is_minimum);
    }
}
