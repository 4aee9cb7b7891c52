use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{JointSource, Labeling};

/// `Q = (Q_1, ..., Q_l)` with `Q_j = floor(min(h(M_j), psi))`.
#[derive(Clone, Debug, Serialize)]
pub struct MessageStabilizer {
    pub psi: u64,
    pub rho: f64,
    /// `14 rho + 2^{-rho} psi`.
    pub beta: f64,
    /// `q_j(m)` per component and message value; `None` for zero-mass values.
    pub levels: Vec<Vec<Option<u64>>>,
    /// `h(m)` per component and message value.
    pub surprisals: Vec<Vec<f64>>,
    /// Whether each component is uniform over its alphabet.
    pub uniform: Vec<bool>,
    #[serde(skip)]
    pub labeling: Labeling,
    pub log2_count: f64,
    /// `l log2(psi + 1)`.
    pub log2_count_bound: f64,
}

/// `floor(min(h, psi))`.
pub fn quantize(h: f64, psi: u64) -> u64 {
    if h >= psi as f64 {
        psi
    } else {
        h.floor().max(0.0) as u64
    }
}

pub fn build_q(source: &JointSource, psi: u64, rho: f64) -> Result<MessageStabilizer> {
    if psi == 0 {
        return Err(Error::precondition("psi must be a positive integer"));
    }
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::precondition(format!("rho must lie in [1, inf), got {rho}")));
    }
    let l = source.message_sizes().len();
    let mut levels: Vec<Vec<Option<u64>>> = Vec::with_capacity(l);
    let mut surprisals = Vec::with_capacity(l);
    let mut uniform = Vec::with_capacity(l);
    for j in 0..l {
        let lp = source.message_log_probs(j);
        let h: Vec<f64> = lp.iter().map(|v| -v).collect();
        let size = lp.len() as f64;
        uniform.push(h.iter().all(|v| (v - size.log2()).abs() < 1e-9));
        levels.push(h.iter().map(|&v| v.is_finite().then(|| quantize(v, psi))).collect());
        surprisals.push(h);
    }
    let labeling = Labeling::from_keys(source, |a, _| {
        let atom = &source.atoms()[a];
        (0..l).map(|j| levels[j][atom.labels[j] as usize].unwrap_or(0)).collect::<Vec<u64>>()
    });
    let log2_count = (labeling.count() as f64).log2();
    Ok(MessageStabilizer {
        psi,
        rho,
        beta: 14.0 * rho + (-rho).exp2() * psi as f64,
        levels,
        surprisals,
        uniform,
        labeling,
        log2_count,
        log2_count_bound: l as f64 * ((psi + 1) as f64).log2(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MessageClass {
    Stable,
    Saturate,
    Neither,
}

/// Classification of one conditioning label for one message component.
#[derive(Clone, Debug, Serialize)]
pub struct MessageCheck {
    pub label: u32,
    pub log2_prob: f64,
    pub level: u64,
    /// `Pr(|h(M_j|U) - h(M_j)| > rho~ | u)`.
    pub drift: f64,
    pub class: MessageClass,
    /// `H_u(M_j)`, or `log2 |M_j|` for a uniform component.
    pub centre: f64,
    /// Probability of the defining deviation event for the label's class.
    pub deviation: f64,
    pub ok: bool,
}

/// Stable/saturate split of a conditioning variable `U` (which must determine `Q`).
#[derive(Clone, Debug, Serialize)]
pub struct MessageClassification {
    pub component: usize,
    pub uniform: bool,
    /// `2 rho + log2(|U| + 1)`.
    pub rho_tilde: f64,
    /// `beta + 3 log2 |U|`.
    pub radius: f64,
    /// `2^{-rho}`.
    pub bound: f64,
    pub labels: Vec<MessageCheck>,
    /// `p_U(stable ∪ saturate)`.
    pub covered_mass: f64,
    pub stable_mass: f64,
}

impl MessageClassification {
    pub fn ok(&self) -> bool {
        let floor = 1.0 - self.bound;
        let cover = if self.uniform { self.stable_mass } else { self.covered_mass };
        cover >= floor && self.labels.iter().all(|c| c.ok)
    }

    pub fn class_of(&self, u: u32) -> MessageClass {
        self.labels.iter().find(|c| c.label == u).map_or(MessageClass::Neither, |c| c.class)
    }
}

impl MessageStabilizer {
    /// Classifies every label of `u` for component `j`.
    pub fn classify(&self, source: &JointSource, u: &Labeling, j: usize) -> Result<MessageClassification> {
        if j >= self.levels.len() {
            return Err(Error::precondition(format!("message component {j} does not exist")));
        }
        let count = u.count();
        let log2_u = (count as f64).log2();
        let rho_tilde = 2.0 * self.rho + ((count + 1) as f64).log2();
        let radius = self.beta + 3.0 * log2_u;
        let bound = (-self.rho).exp2();
        let uniform = self.uniform[j];
        let size_log = (source.message_sizes()[j] as f64).log2();
        let pu = u.log_probs(source);
        let mut level = vec![None; count];
        for (a, atom) in source.atoms().iter().enumerate() {
            let q = self.levels[j][atom.labels[j] as usize].unwrap_or(0);
            for (xc, lx) in atom.x_log2.iter().enumerate() {
                let v = u.labels[a][xc];
                if *lx == f64::NEG_INFINITY || v == Labeling::NONE {
                    continue;
                }
                match level[v as usize] {
                    None => level[v as usize] = Some(q),
                    Some(p) if p != q => {
                        return Err(Error::precondition("the conditioning variable does not determine Q"));
                    }
                    _ => {}
                }
            }
        }
        let hm = &self.surprisals[j];
        let mut labels = Vec::new();
        let (mut covered, mut stable) = (0.0, 0.0);
        for v in 0..count as u32 {
            if pu[v as usize] == f64::NEG_INFINITY {
                continue;
            }
            let given = u.message_given(source, v, j);
            let cells: Vec<(f64, f64, f64)> = given
                .iter()
                .enumerate()
                .filter(|(_, l)| **l > f64::NEG_INFINITY)
                .map(|(m, &l)| (l.exp2(), -l, hm[m]))
                .collect();
            let drift: f64 = cells.iter().filter(|c| (c.1 - c.2).abs() > rho_tilde).map(|c| c.0).sum();
            let q = level[v as usize].unwrap_or(0);
            let in_star = drift < bound;
            let class = match (in_star, uniform || q < self.psi) {
                (false, _) => MessageClass::Neither,
                (true, true) => MessageClass::Stable,
                (true, false) => MessageClass::Saturate,
            };
            let entropy: f64 = cells.iter().map(|c| c.0 * c.1).sum();
            let centre = if uniform { size_log } else { entropy };
            let deviation: f64 = match class {
                MessageClass::Saturate => {
                    cells.iter().filter(|c| c.1 < self.psi as f64 - radius).map(|c| c.0).sum()
                }
                _ => cells.iter().filter(|c| (c.1 - centre).abs() > radius).map(|c| c.0).sum(),
            };
            let p = pu[v as usize].exp2();
            match class {
                MessageClass::Stable => {
                    covered += p;
                    stable += p;
                }
                MessageClass::Saturate => covered += p,
                MessageClass::Neither => {}
            }
            labels.push(MessageCheck {
                label: v,
                log2_prob: pu[v as usize],
                level: q,
                drift,
                class,
                centre,
                deviation,
                ok: class == MessageClass::Neither || deviation < bound,
            });
        }
        Ok(MessageClassification {
            component: j,
            uniform,
            rho_tilde,
            radius,
            bound,
            labels,
            covered_mass: covered,
            stable_mass: stable,
        })
    }
}

/// A source carrying only messages, with a single dummy input letter sequence.
pub fn message_only_source(message_sizes: Vec<usize>, entries: Vec<(Vec<u32>, f64)>) -> Result<JointSource> {
    let entries = entries.into_iter().map(|(m, p)| (m, vec![0u32], p)).collect();
    JointSource::explicit(1, 2, message_sizes, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_min_levels() {
        assert_eq!(quantize(3.7, 5), 3);
        assert_eq!(quantize(7.2, 5), 5);
        assert_eq!(quantize(5.0, 5), 5);
    }

    #[test]
    fn uniform_message_is_stable_everywhere() {
        let k = 6u32;
        let size = 1usize << k;
        let entries = (0..size as u32).map(|m| (vec![m], 1.0 / size as f64)).collect();
        let src = message_only_source(vec![size], entries).unwrap();
        let q = build_q(&src, 10, 3.0).unwrap();
        assert!(q.levels[0].iter().all(|l| *l == Some(k as u64)));
        let c = q.classify(&src, &q.labeling, 0).unwrap();
        assert!(c.uniform);
        assert!(c.labels.iter().all(|l| l.class == MessageClass::Stable && l.deviation == 0.0));
        assert!((c.stable_mass - 1.0).abs() < 1e-12);
        assert!(c.ok());
    }

    #[test]
    fn coarser_labels_rejected() {
        let entries = vec![(vec![0], 0.5), (vec![1], 0.25), (vec![2], 0.25)];
        let src = message_only_source(vec![3], entries).unwrap();
        let q = build_q(&src, 8, 1.0).unwrap();
        assert!(q.classify(&src, &Labeling::constant(&src), 0).is_err());
    }
}
