use std::collections::BTreeMap;

use serde::Serialize;

use super::constants::StableParams;
use super::subset::build_stable_subset;
use crate::error::{Error, Result};
use crate::prob::logspace;
use crate::spectrum::LOG_SLACK;
use crate::types::{ChannelModel, ConditionalTable, JointSource, Labeling};

/// Rate assigned to the residual label.
pub const RESIDUAL_RATE: f64 = 3.0;

/// One application of the stable-subset construction to a residual law.
#[derive(Clone, Debug, Serialize)]
pub struct Carve {
    pub label: u32,
    pub s_star: u32,
    pub s_minus: i64,
    /// `r_i = s*_i lambda`.
    pub rate: f64,
    /// Mass of the carved set under the residual law it was carved from.
    pub mass: f64,
    pub mass_ok: bool,
    pub classes: usize,
    pub deviation: f64,
    pub deviation_ok: bool,
}

/// The carves of one law (the input law, or the input law given one message).
#[derive(Clone, Debug, Serialize)]
pub struct CarveGroup {
    pub message: Option<u32>,
    pub carves: Vec<Carve>,
    /// Mass left in label 0.
    pub residual_mass: f64,
    /// `prod_i (1 - p_{X_i}(A†_i))`, equal to `residual_mass` up to rounding.
    pub residual_product: f64,
    /// `(1 - (1/n) log2(n/8))^k` after `k` carves.
    pub residual_chain_bound: f64,
    /// True when carving stopped before `zeta - 1` carves with mass left.
    pub stalled: bool,
}

/// Concentration check for one conditioning label.
#[derive(Clone, Debug, Serialize)]
pub struct LabelCheck {
    pub label: u32,
    pub name: String,
    pub log2_prob: f64,
    /// The centre the spectrum frequency is compared against.
    pub centre: f64,
    pub radius: f64,
    pub deviation: f64,
    pub bound: f64,
    pub ok: bool,
    /// Cells with `h(y|u) < h(y) + log2 p_U(u)` beyond rounding slack.
    pub pointwise_violations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PartitionKind {
    /// Label `i` is the `i`-th carve of the input law; `0` is the residual.
    Carved,
    /// Labels `(floor r, carve)` glued over message values, plus `v0`.
    Quantized,
}

/// A partition `V` of `(X, M)` with its rate map.
#[derive(Clone, Debug, Serialize)]
pub struct Partition {
    pub kind: PartitionKind,
    #[serde(skip)]
    pub labeling: Labeling,
    pub names: Vec<String>,
    pub rates: Vec<f64>,
    pub log2_probs: Vec<f64>,
    /// The reserved unstable label, if it has positive mass.
    pub v0: Option<u32>,
    pub n: usize,
    pub alpha: f64,
    pub zeta: usize,
    /// Radius constant used by the checks.
    pub delta: f64,
    pub v0_mass: f64,
    /// `2^{-((zeta-1)/n) log2(n/8)}`.
    pub v0_bound: f64,
    /// Upper bound on the label count.
    pub count_bound: f64,
    pub groups: Vec<CarveGroup>,
    pub checks: Vec<LabelCheck>,
    /// `max |r(V) - r~(V~, M)|` over cells outside `v0`.
    pub max_rate_gap: f64,
    pub in_range: bool,
}

impl Partition {
    pub fn count(&self) -> usize {
        self.labeling.count()
    }

    pub fn v0_ok(&self) -> bool {
        self.v0_mass < self.v0_bound
    }

    pub fn count_ok(&self) -> bool {
        self.count() as f64 <= self.count_bound
    }

    pub fn checks_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok && c.pointwise_violations == 0)
    }

    pub fn carves_ok(&self) -> bool {
        self.groups.iter().all(|g| g.carves.iter().all(|c| c.mass_ok))
    }
}

/// `2^{-((zeta-1)/n) log2(n/8)}`.
pub fn residual_bound(n: usize, zeta: usize) -> f64 {
    let nf = n as f64;
    (-((zeta as f64 - 1.0) / nf) * (nf / 8.0).log2()).exp2()
}

struct Carving {
    /// Label per input class; `0` for the residual.
    labels: Vec<u32>,
    rates: Vec<f64>,
    group: CarveGroup,
}

fn carve(model: &ChannelModel, x_log2: &[f64], params: &StableParams, zeta: usize, message: Option<u32>) -> Result<Carving> {
    let mut residual = x_log2.to_vec();
    let mut residual_log = logspace::sum(residual.iter().copied());
    let mut labels = vec![0u32; x_log2.len()];
    let mut rates = vec![RESIDUAL_RATE];
    let mut carves = Vec::new();
    let mut product = 1.0;
    let mut stalled = false;
    for i in 1..zeta {
        if residual_log == f64::NEG_INFINITY {
            break;
        }
        let cond: Vec<f64> = residual.iter().map(|l| l - residual_log).collect();
        let sub = match build_stable_subset(model, &cond, params) {
            Ok(s) => s,
            Err(Error::Precondition(_)) if i > 1 => {
                stalled = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if sub.is_empty() {
            stalled = true;
            break;
        }
        for (xc, &b) in sub.members.iter().enumerate() {
            if b {
                labels[xc] = i as u32;
                residual[xc] = f64::NEG_INFINITY;
            }
        }
        product *= 1.0 - sub.mass;
        residual_log = logspace::sum(residual.iter().copied());
        rates.push(sub.r);
        carves.push(Carve {
            label: i as u32,
            s_star: sub.s_star,
            s_minus: sub.s_minus,
            rate: sub.r,
            mass: sub.mass,
            mass_ok: sub.mass_ok,
            classes: sub.member_count(),
            deviation: sub.deviation,
            deviation_ok: sub.deviation_ok,
        });
    }
    let residual_mass = residual_log.exp2();
    let chain = (1.0 - params.mass_floor).powi(carves.len() as i32);
    Ok(Carving {
        labels,
        rates,
        group: CarveGroup {
            message,
            carves,
            residual_mass,
            residual_product: product.max(0.0),
            residual_chain_bound: chain,
            stalled: stalled && residual_log > f64::NEG_INFINITY,
        },
    })
}

/// Dense labels for `key(atom, class)` over positive cells, with display names.
fn intern<K: Ord + Clone>(source: &JointSource, key: impl Fn(usize, usize) -> K, name: impl Fn(&K) -> String) -> (Labeling, Vec<K>) {
    let mut seen: BTreeMap<K, u32> = BTreeMap::new();
    for (a, atom) in source.atoms().iter().enumerate() {
        for (c, lx) in atom.x_log2.iter().enumerate() {
            if *lx > f64::NEG_INFINITY {
                seen.entry(key(a, c)).or_insert(0);
            }
        }
    }
    for (i, v) in seen.values_mut().enumerate() {
        *v = i as u32;
    }
    let labels = source
        .atoms()
        .iter()
        .enumerate()
        .map(|(a, atom)| {
            atom.x_log2
                .iter()
                .enumerate()
                .map(|(c, lx)| if *lx > f64::NEG_INFINITY { seen[&key(a, c)] } else { Labeling::NONE })
                .collect()
        })
        .collect();
    let keys: Vec<K> = seen.into_keys().collect();
    let names = keys.iter().map(&name).collect();
    (Labeling { labels, names }, keys)
}

/// `h(y)` per output class of the unconditioned output law.
fn output_surprisals(source: &JointSource, model: &ChannelModel) -> Vec<f64> {
    let y = model.y();
    model.output_log(&source.x_marginal()).iter().enumerate().map(|(yc, l)| y.log2_size(yc) - l).collect()
}

/// Repeatedly carves stable subsets out of the law of `X` (messages ignored).
///
/// Label `i >= 1` is the `i`-th carve with rate `s*_i lambda`; label `0`
/// holds what is left after `zeta - 1` carves, with rate 3.
pub fn carve_partition(source: &JointSource, model: &ChannelModel, params: &StableParams, zeta: usize) -> Result<Partition> {
    if zeta < 2 {
        return Err(Error::precondition(format!("zeta must be at least 2, got {zeta}")));
    }
    let c = carve(model, &source.x_marginal(), params, zeta, None)?;
    let (labeling, keys) = intern(source, |_, xc| c.labels[xc], |k| k.to_string());
    let rates: Vec<f64> = keys.iter().map(|&k| c.rates[k as usize]).collect();
    let log2_probs = labeling.log_probs(source);
    let v0 = keys.iter().position(|&k| k == 0).map(|i| i as u32);
    let v0_mass = v0.map_or(0.0, |v| log2_probs[v as usize].exp2());
    let nf = params.n as f64;
    let h_y = output_surprisals(source, model);
    let bound = 3.0 * params.image_floor;
    let checks = (0..labeling.count() as u32)
        .filter(|&u| Some(u) != v0)
        .map(|u| {
            let table = ConditionalTable::new(source, model, &labeling, u, None);
            let radius = nf * params.delta - table.log2_pu;
            let centre = rates[u as usize];
            let deviation = table.prob_where(|_, _, h| (h - centre).abs() > radius);
            LabelCheck {
                label: u,
                name: labeling.names[u as usize].clone(),
                log2_prob: table.log2_pu,
                centre,
                radius,
                deviation,
                bound,
                ok: deviation < bound,
                pointwise_violations: pointwise(&table, &h_y),
            }
        })
        .collect();
    Ok(Partition {
        kind: PartitionKind::Carved,
        names: labeling.names.clone(),
        labeling,
        rates,
        log2_probs,
        v0,
        n: params.n,
        alpha: params.alpha,
        zeta,
        delta: params.delta,
        v0_mass,
        v0_bound: residual_bound(params.n, zeta),
        count_bound: zeta as f64,
        groups: vec![c.group],
        checks,
        max_rate_gap: 0.0,
        in_range: params.in_range,
    })
}

fn pointwise(table: &ConditionalTable, h_y: &[f64]) -> usize {
    table.cells().filter(|&(_, yc, _, h)| h < h_y[yc] - (-table.log2_pu) - LOG_SLACK).count()
}

/// Carves the law of `X` given each value of `M_j` (or of `X` alone when
/// `component` is `None`), then glues the carves into one partition labelled
/// `(floor r~, carve)`, with every residual cell sent to `v0`.
pub fn carve_partition_per_message(
    source: &JointSource,
    model: &ChannelModel,
    params: &StableParams,
    zeta: usize,
    component: Option<usize>,
) -> Result<Partition> {
    if zeta < 2 {
        return Err(Error::precondition(format!("zeta must be at least 2, got {zeta}")));
    }
    let mut carvings: BTreeMap<u32, Carving> = BTreeMap::new();
    match component {
        None => {
            carvings.insert(0, carve(model, &source.x_marginal(), params, zeta, None)?);
        }
        Some(j) => {
            if j >= source.message_sizes().len() {
                return Err(Error::precondition(format!("message component {j} does not exist")));
            }
            for (m, lp) in source.message_log_probs(j).iter().enumerate() {
                if *lp > f64::NEG_INFINITY {
                    let m = m as u32;
                    carvings.insert(m, carve(model, &source.x_given_message(j, m), params, zeta, Some(m))?);
                }
            }
        }
    }
    let msg = |a: usize| component.map_or(0, |j| source.atoms()[a].labels[j]);
    // None is v0; otherwise (floor r~, carve label).
    let key = |a: usize, xc: usize| -> Option<(u64, u32)> {
        let c = &carvings[&msg(a)];
        let v = c.labels[xc];
        (v != 0).then(|| (c.rates[v as usize].floor() as u64, v))
    };
    let (labeling, keys) = intern(source, key, |k| match k {
        None => "v0".to_string(),
        Some((r, v)) => format!("({r},{v})"),
    });
    let rates: Vec<f64> = keys.iter().map(|k| k.map_or(RESIDUAL_RATE, |(r, _)| r as f64)).collect();
    let v0 = keys.iter().position(|k| k.is_none()).map(|i| i as u32);
    let mut max_rate_gap: f64 = 0.0;
    for (a, atom) in source.atoms().iter().enumerate() {
        let c = &carvings[&msg(a)];
        for (xc, lx) in atom.x_log2.iter().enumerate() {
            let u = labeling.labels[a][xc];
            if *lx > f64::NEG_INFINITY && Some(u) != v0 {
                max_rate_gap = max_rate_gap.max((rates[u as usize] - c.rates[c.labels[xc] as usize]).abs());
            }
        }
    }
    let log2_probs = labeling.log_probs(source);
    let v0_mass = v0.map_or(0.0, |v| log2_probs[v as usize].exp2());
    let nf = params.n as f64;
    let delta = params.delta + params.alpha + 1.0 / nf;
    let bound = 4.0 * params.image_floor;
    let h_y = output_surprisals(source, model);
    let checks = (0..labeling.count() as u32)
        .filter(|&u| Some(u) != v0)
        .map(|u| {
            let table = ConditionalTable::new(source, model, &labeling, u, component);
            let radius = nf * delta - table.log2_pu;
            let centre = rates[u as usize];
            let deviation = table.prob_where(|_, _, h| (h - centre).abs() > radius);
            let single = ConditionalTable::new(source, model, &labeling, u, None);
            LabelCheck {
                label: u,
                name: labeling.names[u as usize].clone(),
                log2_prob: table.log2_pu,
                centre,
                radius,
                deviation,
                bound,
                ok: deviation < bound,
                pointwise_violations: pointwise(&single, &h_y),
            }
        })
        .collect();
    let ny = model.channel().outputs() as f64;
    Ok(Partition {
        kind: PartitionKind::Quantized,
        names: labeling.names.clone(),
        labeling,
        rates,
        log2_probs,
        v0,
        n: params.n,
        alpha: params.alpha,
        zeta,
        delta,
        v0_mass,
        v0_bound: residual_bound(params.n, zeta),
        count_bound: 2.0 * zeta as f64 * nf * ny.log2(),
        groups: carvings.into_values().map(|c| c.group).collect(),
        checks,
        max_rate_gap,
        in_range: params.in_range,
    })
}

/// Good set `U_{i|j}` of the product partition: labels whose `(i, j)` part is not `v0`.
#[derive(Clone, Debug, Serialize)]
pub struct GoodSet {
    pub channel: usize,
    pub message: Option<usize>,
    pub members: Vec<bool>,
    pub mass: f64,
    /// `1 - 2^{-(n/2) log2(n/8)}`.
    pub bound: f64,
    pub ok: bool,
}

/// Concentration of `h(Y_i | M_j, U)` about `H_u(Y_i | M_j)` for one label.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyCheck {
    pub channel: usize,
    pub message: Option<usize>,
    pub label: u32,
    pub log2_prob: f64,
    /// `H_u(Y_i | M_j)`.
    pub entropy: f64,
    pub radius: f64,
    pub deviation: f64,
    pub bound: f64,
    pub ok: bool,
}

/// The product partition over every (channel, message) pair.
#[derive(Clone, Debug, Serialize)]
pub struct FullPartition {
    pub parts: Vec<(usize, Option<usize>, Partition)>,
    #[serde(skip)]
    pub labeling: Labeling,
    pub log2_probs: Vec<f64>,
    /// `log2 |V|` counted over labels with positive mass.
    pub log2_count: f64,
    /// `lk log2(2 n^3 log2|Y|)`.
    pub log2_count_bound: f64,
    /// `3 max delta_ij + 4 log2|Y| / n`.
    pub delta: f64,
    pub alpha: f64,
    pub n: usize,
    pub good: Vec<GoodSet>,
    pub checks: Vec<EntropyCheck>,
    pub in_range: bool,
}

impl FullPartition {
    pub fn count_ok(&self) -> bool {
        self.log2_count <= self.log2_count_bound + 1e-12
    }

    pub fn ok(&self) -> bool {
        self.count_ok() && self.good.iter().all(|g| g.ok) && self.checks.iter().all(|c| c.ok)
    }
}

/// `V = (V_{i,j})` over channels `i` and message components `j`, each the
/// per-message partition with `zeta` carves per law.
///
/// With no message components the single part per channel uses the law of `X`.
pub fn build_v_full(source: &JointSource, models: &[ChannelModel], alpha: f64, zeta: usize, unsafe_ok: bool) -> Result<FullPartition> {
    if models.is_empty() {
        return Err(Error::precondition("at least one channel is required"));
    }
    let n = source.n();
    let l = source.message_sizes().len();
    let comps: Vec<Option<usize>> = if l == 0 { vec![None] } else { (0..l).map(Some).collect() };
    let mut parts = Vec::new();
    let mut in_range = true;
    let mut max_delta: f64 = 0.0;
    let mut max_log_y: f64 = 0.0;
    for (i, model) in models.iter().enumerate() {
        let ny = model.channel().outputs();
        let params = StableParams::new(n, ny, alpha, unsafe_ok)?;
        in_range &= params.in_range;
        max_log_y = max_log_y.max((ny as f64).log2());
        for &j in &comps {
            let p = carve_partition_per_message(source, model, &params, zeta, j)?;
            max_delta = max_delta.max(p.delta);
            parts.push((i, j, p));
        }
    }
    let refs: Vec<&Labeling> = parts.iter().map(|p| &p.2.labeling).collect();
    let labeling = Labeling::product(source, &refs);
    let log2_probs = labeling.log_probs(source);
    let nf = n as f64;
    let delta = 3.0 * max_delta + 4.0 * max_log_y / nf;
    let good_bound = 1.0 - (-(nf / 2.0) * (nf / 8.0).log2()).exp2();
    // The part label of each product label, read off any cell carrying it.
    let mut part_of = vec![vec![Labeling::NONE; labeling.count()]; parts.len()];
    for (a, row) in labeling.labels.iter().enumerate() {
        for (xc, &u) in row.iter().enumerate() {
            if u != Labeling::NONE {
                for (k, p) in parts.iter().enumerate() {
                    part_of[k][u as usize] = p.2.labeling.labels[a][xc];
                }
            }
        }
    }
    let good: Vec<GoodSet> = parts
        .iter()
        .enumerate()
        .map(|(k, (i, j, p))| {
            let members: Vec<bool> = part_of[k].iter().map(|&v| Some(v) != p.v0).collect();
            let mass = logspace::sum(members.iter().zip(&log2_probs).filter(|(&b, _)| b).map(|(_, l)| *l)).exp2();
            GoodSet { channel: *i, message: *j, members, mass, bound: good_bound, ok: mass >= good_bound }
        })
        .collect();
    let image_floor = (-nf * alpha).exp2();
    let mut checks = Vec::new();
    for (k, (i, j, _)) in parts.iter().enumerate() {
        for u in 0..labeling.count() as u32 {
            if !good[k].members[u as usize] {
                continue;
            }
            let table = ConditionalTable::new(source, &models[*i], &labeling, u, *j);
            let entropy = table.entropy();
            let radius = nf * delta - 3.0 * table.log2_pu;
            let deviation = table.prob_where(|_, _, h| (h - entropy).abs() > radius);
            let bound = 4.0 * image_floor;
            checks.push(EntropyCheck {
                channel: *i,
                message: *j,
                label: u,
                log2_prob: table.log2_pu,
                entropy,
                radius,
                deviation,
                bound,
                ok: deviation < bound,
            });
        }
    }
    let positive = log2_probs.iter().filter(|l| **l > f64::NEG_INFINITY).count();
    let lk = (comps.len() * models.len()) as f64;
    Ok(FullPartition {
        parts,
        labeling,
        log2_probs,
        log2_count: (positive as f64).log2(),
        log2_count_bound: lk * (2.0 * nf.powi(3) * max_log_y).log2(),
        delta,
        alpha,
        n,
        good,
        checks,
        in_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{Channel, Pmf};
    use crate::types::Caps;

    fn setup(w: &Channel, p: &Pmf, n: usize) -> (JointSource, ChannelModel) {
        let caps = Caps::default();
        let src = JointSource::iid(n, p, &caps).unwrap();
        let model = ChannelModel::new(src.space(), w, &caps).unwrap();
        (src, model)
    }

    #[test]
    fn zeta_two_is_one_carve() {
        let (src, model) = setup(&Channel::bsc(0.1).unwrap(), &Pmf::new(vec![0.8, 0.2]).unwrap(), 50);
        let params = StableParams::new(50, 2, 0.15, false).unwrap();
        let p = carve_partition(&src, &model, &params, 2).unwrap();
        assert_eq!(p.groups[0].carves.len(), 1);
        assert!(p.count() <= 2);
    }

    #[test]
    fn noiseless_stops_after_first_carve() {
        let (src, model) = setup(&Channel::identity(2).unwrap(), &Pmf::uniform(2), 32);
        let params = StableParams::new(32, 2, 0.17, false).unwrap();
        let p = carve_partition(&src, &model, &params, 10).unwrap();
        assert_eq!(p.groups[0].carves.len(), 1);
        assert_eq!(p.v0, None);
        assert_eq!(p.v0_mass, 0.0);
    }

    #[test]
    fn residual_follows_the_product_of_carves() {
        let (src, model) = setup(&Channel::bsc(0.1).unwrap(), &Pmf::new(vec![0.7, 0.3]).unwrap(), 50);
        let params = StableParams::new(50, 2, 0.15, false).unwrap();
        let p = carve_partition(&src, &model, &params, 25).unwrap();
        let g = &p.groups[0];
        assert!((g.residual_mass - g.residual_product).abs() < 1e-9);
        assert!(g.residual_mass <= g.residual_chain_bound + 1e-12);
        assert!(p.v0_ok() && p.carves_ok() && p.checks_ok());
    }

    #[test]
    fn single_message_matches_plain_carving() {
        let (src, model) = setup(&Channel::bsc(0.1).unwrap(), &Pmf::new(vec![0.7, 0.3]).unwrap(), 50);
        let params = StableParams::new(50, 2, 0.15, false).unwrap();
        let a = carve_partition(&src, &model, &params, 25).unwrap();
        let b = carve_partition_per_message(&src, &model, &params, 25, None).unwrap();
        assert_eq!(a.count(), b.count());
        assert!(b.max_rate_gap <= 1.0);
        let mut pa = a.log2_probs.clone();
        let mut pb = b.log2_probs.clone();
        pa.sort_by(f64::total_cmp);
        pb.sort_by(f64::total_cmp);
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
