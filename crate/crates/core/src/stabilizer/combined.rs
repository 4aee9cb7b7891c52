use serde::Serialize;

use super::constants::eps_n;
use super::message::{build_q, MessageClass, MessageClassification, MessageStabilizer};
use super::partition::{build_v_full, FullPartition};
use crate::error::{Error, Result};
use crate::types::{ChannelModel, ConditionalTable, JointSource, Labeling};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DomainMode {
    Stable,
    Saturate,
}

/// The quantities one clause test needs for a single `(y, m)` cell.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DomainPoint {
    /// `h(y | m_j, u)`.
    pub h_y: f64,
    /// `H_u(Y | M_j)`.
    pub entropy_y: f64,
    /// `h(m_j | u)`.
    pub h_m_given_u: f64,
    /// `H_u(M_j)`, or `log2 |M_j|` when `M_j` is uniform.
    pub entropy_m: f64,
    /// `h(m_j)`.
    pub h_m: f64,
}

/// Clause-by-clause membership in the `nu`-stable or `nu`-saturated set.
///
/// The saturate mode replaces the second clause by `h(m_j|u) - n^2 >= -n nu`.
pub fn stability_domain_membership(p: &DomainPoint, n: usize, nu: f64, mode: DomainMode) -> [bool; 3] {
    let nf = n as f64;
    let r = nf * nu;
    let second = match mode {
        DomainMode::Stable => (p.h_m_given_u - p.entropy_m).abs() <= r,
        DomainMode::Saturate => p.h_m_given_u - nf * nf >= -r,
    };
    [(p.h_y - p.entropy_y).abs() <= r, second, (p.h_m_given_u - p.h_m).abs() <= r]
}

/// Constants of the combined construction.
#[derive(Clone, Debug, Serialize)]
pub struct CombinedParams {
    pub n: usize,
    pub eps_n: f64,
    /// `2 eps_n`.
    pub alpha: f64,
    pub zeta: usize,
    pub psi: u64,
    pub rho: f64,
}

impl CombinedParams {
    /// `alpha = 2 eps_n`, `zeta = psi = n^2`, `rho = max(1, n eps_n)`.
    pub fn defaults(n: usize, nx: usize, ny: usize) -> Self {
        let e = eps_n(n, nx, ny);
        CombinedParams { n, eps_n: e, alpha: 2.0 * e, zeta: n * n, psi: (n * n) as u64, rho: (n as f64 * e).max(1.0) }
    }
}

/// Per-label, per-(channel, message) outcome of the domain test.
#[derive(Clone, Debug, Serialize)]
pub struct DomainCheck {
    pub label: u32,
    pub channel: usize,
    pub message: Option<usize>,
    pub mode: DomainMode,
    /// `Pr((Y_w, M) in D(u, w; nu) | u)`.
    pub probability: f64,
    /// `1 - 8 * 2^{-n eps_n}`.
    pub target: f64,
    pub ok: bool,
}

/// `U = (V, Q, T)` with its good set and the stable/saturate split.
#[derive(Clone, Debug, Serialize)]
pub struct CombinedU {
    pub params: CombinedParams,
    pub v: FullPartition,
    pub q: MessageStabilizer,
    #[serde(skip)]
    pub labeling: Labeling,
    pub log2_probs: Vec<f64>,
    /// `log2 |U|`, counting labels with positive mass.
    pub log2_count: f64,
    pub log2_v: f64,
    pub log2_q: f64,
    pub log2_t: f64,
    pub beta: f64,
    /// `(7/3) delta_V + 3 eps_n + 5 * 2^{-n eps_n} log2|Y|`.
    pub delta: f64,
    pub nu: f64,
    /// Membership of each label in the good set.
    pub good: Vec<bool>,
    pub good_mass: f64,
    /// Mass outside each component good set, summed: `1 - p(good) <= residuals`.
    pub residual_sum: f64,
    pub classes: Vec<MessageClassification>,
    pub checks: Vec<DomainCheck>,
    pub in_range: bool,
}

impl CombinedU {
    pub fn ok(&self) -> bool {
        self.good_mass >= 1.0 - self.residual_sum - 1e-12 && self.checks.iter().all(|c| c.ok)
    }

    pub fn flagged(&self) -> usize {
        self.checks.iter().filter(|c| !c.ok).count()
    }
}

/// Builds `U = (V, Q, T)` over the given channels. `T` defaults to the type of `X`.
pub fn assemble_u(
    source: &JointSource,
    models: &[ChannelModel],
    params: &CombinedParams,
    t: Option<&Labeling>,
    unsafe_ok: bool,
) -> Result<CombinedU> {
    if models.is_empty() {
        return Err(Error::precondition("at least one channel is required"));
    }
    let n = source.n();
    let nf = n as f64;
    let v = build_v_full(source, models, params.alpha, params.zeta, unsafe_ok)?;
    let q = build_q(source, params.psi, params.rho)?;
    let default_t;
    let t = match t {
        Some(t) => t,
        None => {
            default_t = Labeling::input_type(source);
            &default_t
        }
    };
    let labeling = Labeling::product(source, &[&v.labeling, &q.labeling, t]);
    let log2_probs = labeling.log_probs(source);
    let positive = |l: &[f64]| (l.iter().filter(|v| **v > f64::NEG_INFINITY).count() as f64).log2();
    let log2_count = positive(&log2_probs);
    let log2_t = positive(&t.log_probs(source));
    let count = labeling.count();
    let e = params.eps_n;
    let max_log_y = models.iter().map(|m| (m.channel().outputs() as f64).log2()).fold(0.0, f64::max);
    let tail = (-nf * e).exp2();
    let delta = 7.0 / 3.0 * v.delta + 3.0 * e + 5.0 * tail * max_log_y;
    let nu = (delta + 7.0 * e + 7.0 * log2_count / nf)
        .max((q.beta + 3.0 * log2_count) / nf)
        .max(2.0 * e + ((count + 1) as f64).log2() / nf);

    // Good set: V's good sets, Q's stable/saturate split, the drift set and the mass set.
    let mut good = vec![true; count];
    let mut residual_sum = 0.0;
    let mut v_of = vec![Labeling::NONE; count];
    for (a, row) in labeling.labels.iter().enumerate() {
        for (xc, &u) in row.iter().enumerate() {
            if u != Labeling::NONE {
                v_of[u as usize] = v.labeling.labels[a][xc];
            }
        }
    }
    for g in &v.good {
        residual_sum += 1.0 - g.mass;
        for u in 0..count {
            let vl = v_of[u];
            if vl != Labeling::NONE && !g.members[vl as usize] {
                good[u] = false;
            }
        }
    }
    let l = source.message_sizes().len();
    let mut classes = Vec::with_capacity(l);
    for j in 0..l {
        let c = q.classify(source, &labeling, j)?;
        residual_sum += if c.uniform { 1.0 - c.stable_mass } else { 1.0 - c.covered_mass };
        for m in &c.labels {
            if m.class == MessageClass::Neither {
                good[m.label as usize] = false;
            }
        }
        // Drift set: Pr(|h(M_j|U) - h(M_j)| > 2 n eps_n + log2(|U|+1) | u) < 2^{-n eps_n}.
        let hm = &q.surprisals[j];
        let radius = 2.0 * nf * e + ((count + 1) as f64).log2();
        let mut drift_out = 0.0;
        for u in 0..count as u32 {
            if log2_probs[u as usize] == f64::NEG_INFINITY {
                continue;
            }
            let given = labeling.message_given(source, u, j);
            let drift: f64 = given
                .iter()
                .enumerate()
                .filter(|(m, l)| **l > f64::NEG_INFINITY && (-**l - hm[*m]).abs() > radius)
                .map(|(_, l)| l.exp2())
                .sum();
            if drift >= tail {
                good[u as usize] = false;
                drift_out += log2_probs[u as usize].exp2();
            }
        }
        residual_sum += drift_out;
        classes.push(c);
    }
    let mut light = 0.0;
    for u in 0..count {
        if log2_probs[u] > f64::NEG_INFINITY && -log2_probs[u] >= nf * e + log2_count {
            good[u] = false;
            light += log2_probs[u].exp2();
        }
    }
    residual_sum += light;
    let good_mass: f64 = (0..count).filter(|&u| good[u] && log2_probs[u] > f64::NEG_INFINITY).map(|u| log2_probs[u].exp2()).sum();

    let target = 1.0 - 8.0 * tail;
    let mut checks = Vec::new();
    for u in 0..count as u32 {
        if !good[u as usize] || log2_probs[u as usize] == f64::NEG_INFINITY {
            continue;
        }
        for (i, model) in models.iter().enumerate() {
            if l == 0 {
                let table = ConditionalTable::new(source, model, &labeling, u, None);
                let entropy = table.entropy();
                let probability = table.prob_where(|_, _, h| (h - entropy).abs() <= nf * nu);
                checks.push(DomainCheck {
                    label: u,
                    channel: i,
                    message: None,
                    mode: DomainMode::Stable,
                    probability,
                    target,
                    ok: probability >= target,
                });
                continue;
            }
            for (j, c) in classes.iter().enumerate() {
                let mode = match c.class_of(u) {
                    MessageClass::Saturate => DomainMode::Saturate,
                    _ => DomainMode::Stable,
                };
                let table = ConditionalTable::new(source, model, &labeling, u, Some(j));
                let entropy_y = table.entropy();
                let entropy_m = if c.uniform {
                    (source.message_sizes()[j] as f64).log2()
                } else {
                    table.rows.iter().map(|r| -r.log2_pm * r.log2_pm.exp2()).sum()
                };
                let hm = &q.surprisals[j];
                let probability: f64 = table
                    .cells()
                    .filter(|&(r, _, _, h)| {
                        let row = &table.rows[r];
                        let p = DomainPoint { h_y: h, entropy_y, h_m_given_u: -row.log2_pm, entropy_m, h_m: hm[row.m as usize] };
                        stability_domain_membership(&p, n, nu, mode).iter().all(|&b| b)
                    })
                    .map(|(_, _, p, _)| p)
                    .sum();
                checks.push(DomainCheck { label: u, channel: i, message: Some(j), mode, probability, target, ok: probability >= target });
            }
        }
    }
    Ok(CombinedU {
        params: params.clone(),
        log2_v: v.log2_count,
        log2_q: q.log2_count,
        in_range: v.in_range,
        beta: q.beta,
        v,
        q,
        labeling,
        log2_probs,
        log2_count,
        log2_t,
        delta,
        nu,
        good,
        good_mass,
        residual_sum,
        classes,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_radius_accepts_everything() {
        let p = DomainPoint { h_y: 3.0, entropy_y: 1.0, h_m_given_u: 2.0, entropy_m: 2.0, h_m: 2.0 };
        assert_eq!(stability_domain_membership(&p, 4, 4.0, DomainMode::Stable), [true; 3]);
    }

    #[test]
    fn zero_radius_rejects_spread() {
        let p = DomainPoint { h_y: 3.0, entropy_y: 2.5, h_m_given_u: 2.0, entropy_m: 2.0, h_m: 2.0 };
        assert_eq!(stability_domain_membership(&p, 4, 0.0, DomainMode::Stable), [false, true, true]);
    }

    #[test]
    fn saturate_threshold() {
        let p = DomainPoint { h_y: 0.0, entropy_y: 0.0, h_m_given_u: 15.0, entropy_m: 0.0, h_m: 15.0 };
        assert_eq!(stability_domain_membership(&p, 4, 0.25, DomainMode::Saturate), [true, true, true]);
        assert_eq!(stability_domain_membership(&p, 4, 0.2, DomainMode::Saturate)[1], false);
    }
}
