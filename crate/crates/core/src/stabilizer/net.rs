use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::Channel;
use crate::types::Caps;

/// A finite grid of channels: every row lies in the union over anchors `y`
/// of the pmfs whose non-anchor entries are multiples of `eps~ = eps/(4|Y|^2)`.
#[derive(Clone, Debug, Serialize)]
pub struct DistributionNet {
    pub eps: f64,
    pub eps_tilde: f64,
    pub nx: usize,
    pub ny: usize,
    /// Distinct grid rows; a net channel picks one row per input letter.
    pub rows: Vec<Vec<f64>>,
    /// `|rows|^{|X|}`.
    pub cardinality: f64,
    /// `(|Y| (1 + floor(4|Y|^2/eps)))^{|X||Y|}`.
    pub cardinality_bound: f64,
}

/// Cardinality bound for the channel net.
pub fn net_cardinality_bound(eps: f64, nx: usize, ny: usize) -> f64 {
    let per = ny as f64 * (1.0 + (4.0 * (ny * ny) as f64 / eps).floor());
    per.powi((nx * ny) as i32)
}

/// Largest grid index `j` with `j eps~ <= 1`.
fn steps(eps_tilde: f64) -> u64 {
    let mut j = (1.0 / eps_tilde).floor() as u64;
    while (j + 1) as f64 * eps_tilde <= 1.0 {
        j += 1;
    }
    while j > 0 && j as f64 * eps_tilde > 1.0 {
        j -= 1;
    }
    j
}

pub fn build_net(eps: f64, nx: usize, ny: usize, caps: &Caps) -> Result<DistributionNet> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::precondition(format!("eps must lie in (0, 1), got {eps}")));
    }
    if nx < 2 || ny < 2 {
        return Err(Error::precondition("net alphabets need at least two letters"));
    }
    let eps_tilde = eps / (4.0 * (ny * ny) as f64);
    let jmax = steps(eps_tilde);
    let per_anchor = ((jmax + 1) as f64).powi(ny as i32 - 1);
    let work = per_anchor * ny as f64;
    if work > caps.max_sequences as f64 {
        return Err(Error::cap("net grid points", work, caps.max_sequences as f64));
    }
    // Exact integer keys: non-anchor entries are j * eps~, the anchor takes the rest.
    let mut keys: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut idx = vec![0u64; ny - 1];
    for anchor in 0..ny {
        idx.iter_mut().for_each(|v| *v = 0);
        loop {
            let used: u64 = idx.iter().sum();
            if used as f64 * eps_tilde <= 1.0 {
                let mut key = vec![0i64; ny];
                let mut k = 0;
                for (y, slot) in key.iter_mut().enumerate() {
                    if y != anchor {
                        *slot = idx[k] as i64;
                        k += 1;
                    }
                }
                // Anchor entry stored as -(sum of others) so rows are comparable across anchors.
                key[anchor] = -(used as i64) - 1;
                keys.insert(canonical(&key, anchor, eps_tilde));
            }
            let mut i = 0;
            loop {
                if i == idx.len() {
                    break;
                }
                idx[i] += 1;
                if idx[i] <= jmax {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == idx.len() {
                break;
            }
        }
    }
    let rows: Vec<Vec<f64>> = keys.iter().map(|k| decode(k, eps_tilde)).collect();
    let cardinality = (rows.len() as f64).powi(nx as i32);
    Ok(DistributionNet { eps, eps_tilde, nx, ny, rows, cardinality, cardinality_bound: net_cardinality_bound(eps, nx, ny) })
}

/// A row key in which every entry is an integer multiple of `eps~` when possible.
///
/// An anchor entry `1 - s eps~` is itself a grid multiple exactly when
/// `1/eps~` is an integer; only then can rows from different anchors coincide.
fn canonical(key: &[i64], anchor: usize, eps_tilde: f64) -> Vec<i64> {
    let inv = 1.0 / eps_tilde;
    let whole = (inv - inv.round()).abs() < 1e-9;
    let mut out = key.to_vec();
    if whole {
        let used = -(key[anchor] + 1);
        out[anchor] = inv.round() as i64 - used;
        out.push(-1);
    } else {
        out.push(anchor as i64);
    }
    out
}

fn decode(key: &[i64], eps_tilde: f64) -> Vec<f64> {
    let ny = key.len() - 1;
    let tag = key[ny];
    if tag == -1 {
        let inv = (1.0 / eps_tilde).round();
        return key[..ny].iter().map(|&j| j as f64 / inv).collect();
    }
    let anchor = tag as usize;
    let mut row: Vec<f64> = key[..ny].iter().map(|&j| j as f64 * eps_tilde).collect();
    let rest: f64 = row.iter().enumerate().filter(|(y, _)| *y != anchor).map(|(_, v)| v).sum();
    row[anchor] = (1.0 - rest).max(0.0);
    row
}

impl DistributionNet {
    /// The net point whose non-anchor entries round `w` up to the grid; the
    /// anchor of each row is its largest entry.
    pub fn nearest(&self, w: &Channel) -> Result<Channel> {
        if w.inputs() != self.nx || w.outputs() != self.ny {
            return Err(Error::precondition("channel shape does not match the net"));
        }
        let jmax = steps(self.eps_tilde);
        let rows = w
            .rows()
            .iter()
            .map(|r| {
                let p = r.probs();
                let anchor = (0..p.len()).fold(0, |b, y| if p[y] > p[b] { y } else { b });
                let mut out = vec![0.0; p.len()];
                let mut rest = 0.0;
                for y in 0..p.len() {
                    if y == anchor {
                        continue;
                    }
                    let mut j = (p[y] / self.eps_tilde).ceil() as u64;
                    if j > 0 && ((j - 1) as f64 * self.eps_tilde) >= p[y] {
                        j -= 1;
                    }
                    while (j as f64) * self.eps_tilde < p[y] {
                        j += 1;
                    }
                    out[y] = j.min(jmax) as f64 * self.eps_tilde;
                    rest += out[y];
                }
                out[anchor] = 1.0 - rest;
                out
            })
            .collect();
        Channel::named(format!("net({})", w.name()), rows)
    }
}

/// `max log2(w / w~)` over entries with `w > 0`: the supremum of the directed
/// divergence `D_ŵ(w || w~ | p̂)` over all `ŵ`, `p̂`.
pub fn net_gap(w: &Channel, w_tilde: &Channel) -> f64 {
    w.max_log_ratio(w_tilde)
}

/// Smallest `n` at which `eps/2 <= eps - (2|X||Y|/n) log2 n`.
pub fn net_threshold_n(eps: f64, nx: usize, ny: usize) -> usize {
    let c = 2.0 * (nx * ny) as f64;
    (2..).find(|&n| c * (n as f64).log2() / n as f64 <= eps / 2.0).unwrap_or(usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn bound_formula() {
        assert_eq!(net_cardinality_bound(0.5, 2, 2), 18_974_736.0);
    }

    #[test]
    fn binary_rows_deduplicate_across_anchors() {
        let net = build_net(0.2, 2, 2, &Caps::default()).unwrap();
        assert_eq!(net.rows.len(), 81);
        assert!(net.cardinality <= net.cardinality_bound);
    }

    #[test]
    fn grid_point_maps_to_itself() {
        let net = build_net(0.2, 2, 2, &Caps::default()).unwrap();
        let w = Channel::new(vec![vec![0.75, 0.25], vec![0.0125, 0.9875]]).unwrap();
        let t = net.nearest(&w).unwrap();
        assert!(net_gap(&w, &t) <= 1e-12);
    }

    #[test]
    fn dominance_and_gap() {
        let net = build_net(0.3, 3, 3, &Caps::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let w = Channel::random(&mut rng, 3, 3, 1.0);
            let t = net.nearest(&w).unwrap();
            for x in 0..3 {
                let p = w.row(x).probs();
                let a = (0..3).fold(0, |b, y| if p[y] > p[b] { y } else { b });
                for y in 0..3 {
                    if y == a {
                        assert!(t.get(x, y) >= p[y] - 3.0 * net.eps_tilde - 1e-15);
                    } else {
                        assert!(t.get(x, y) >= p[y]);
                    }
                }
            }
            assert!(net_gap(&w, &t) <= net.eps / 2.0);
        }
    }
}
