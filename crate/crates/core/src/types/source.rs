use std::collections::BTreeMap;

use super::space::SequenceSpace;
use super::{enumerate_types, type_class_log_prob, Caps, Tier};
use crate::error::{Error, Result};
use crate::prob::logspace::{self, LogFactorials};
use crate::prob::{Channel, Pmf};

/// One joint message value `(m_1, ..., m_l)` and the law of `X` given it.
#[derive(Clone, Debug)]
pub struct MessageAtom {
    pub labels: Vec<u32>,
    pub log2_prob: f64,
    /// `log2 p(x-class | m)`, normalized.
    pub x_log2: Vec<f64>,
}

/// A joint law of messages `M_1..M_l` and an input sequence `X`.
///
/// Within every atom the law of `X` must be constant on each class of the
/// sequence space; for the types tier this means exchangeable.
#[derive(Clone, Debug)]
pub struct JointSource {
    x: SequenceSpace,
    message_sizes: Vec<usize>,
    atoms: Vec<MessageAtom>,
}

impl JointSource {
    /// `X` iid with law `p`, no messages, collapsed to types.
    pub fn iid(n: usize, p: &Pmf, caps: &Caps) -> Result<Self> {
        Self::iid_mixture(n, p.len(), vec![], vec![(vec![], 1.0, p.clone())], caps)
    }

    /// For each message tuple, `X` is iid with its own law.
    pub fn iid_mixture(n: usize, nx: usize, message_sizes: Vec<usize>, parts: Vec<(Vec<u32>, f64, Pmf)>, caps: &Caps) -> Result<Self> {
        let x = SequenceSpace::types(n, nx, caps)?;
        let total: f64 = parts.iter().map(|p| p.1).sum();
        check_mass(total)?;
        let mut atoms = Vec::new();
        for (labels, prob, p) in parts {
            check_labels(&labels, &message_sizes)?;
            if p.len() != nx {
                return Err(Error::InvalidDistribution("input law has wrong alphabet".into()));
            }
            if prob <= 0.0 {
                continue;
            }
            let x_log2 = x.classes().iter().map(|c| type_class_log_prob(&c.label, &p)).collect();
            atoms.push(MessageAtom { labels, log2_prob: (prob / total).log2(), x_log2 });
        }
        Ok(JointSource { x, message_sizes, atoms })
    }

    /// Explicit joint law from `(message labels, x sequence, probability)` entries.
    pub fn explicit(n: usize, nx: usize, message_sizes: Vec<usize>, entries: Vec<(Vec<u32>, Vec<u32>, f64)>) -> Result<Self> {
        let total: f64 = entries.iter().map(|e| e.2).sum();
        check_mass(total)?;
        let mut seqs: BTreeMap<Vec<u32>, ()> = BTreeMap::new();
        for (labels, xs, p) in &entries {
            check_labels(labels, &message_sizes)?;
            if *p < 0.0 {
                return Err(Error::InvalidDistribution("negative probability".into()));
            }
            if *p > 0.0 {
                seqs.insert(xs.clone(), ());
            }
        }
        let x = SequenceSpace::explicit(n, nx, seqs.into_keys().collect())?;
        let mut grouped: BTreeMap<Vec<u32>, Vec<f64>> = BTreeMap::new();
        for (labels, xs, p) in entries {
            if p == 0.0 {
                continue;
            }
            let c = x.class_of(&xs).expect("sequence registered");
            grouped.entry(labels).or_insert_with(|| vec![0.0; x.len()])[c] += p / total;
        }
        let atoms = grouped
            .into_iter()
            .map(|(labels, w)| {
                let m: f64 = w.iter().sum();
                let x_log2 = w.iter().map(|v| if *v > 0.0 { (v / m).log2() } else { f64::NEG_INFINITY }).collect();
                MessageAtom { labels, log2_prob: m.log2(), x_log2 }
            })
            .collect();
        Ok(JointSource { x, message_sizes, atoms })
    }

    /// `X` iid with law `p`, every sequence listed separately.
    pub fn explicit_iid(n: usize, p: &Pmf, caps: &Caps) -> Result<Self> {
        let all = SequenceSpace::all_sequences(n, p.len(), caps)?;
        let entries = all
            .classes()
            .iter()
            .map(|c| {
                let lp: f64 = c.label.iter().map(|&s| p.prob(s as usize).log2()).sum();
                (vec![], c.label.clone(), lp.exp2())
            })
            .collect();
        Self::explicit(n, p.len(), vec![], entries)
    }

    pub fn space(&self) -> &SequenceSpace {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn nx(&self) -> usize {
        self.x.alphabet()
    }

    pub fn message_sizes(&self) -> &[usize] {
        &self.message_sizes
    }

    pub fn atoms(&self) -> &[MessageAtom] {
        &self.atoms
    }

    /// `log2 p(x-class)`.
    pub fn x_marginal(&self) -> Vec<f64> {
        (0..self.x.len())
            .map(|c| logspace::sum(self.atoms.iter().map(|a| a.log2_prob + a.x_log2[c])))
            .collect()
    }

    /// `log2 p(M_j = m)`.
    pub fn message_log_probs(&self, j: usize) -> Vec<f64> {
        (0..self.message_sizes[j])
            .map(|m| logspace::sum(self.atoms.iter().filter(|a| a.labels[j] as usize == m).map(|a| a.log2_prob)))
            .collect()
    }

    /// `log2 p(x-class | M_j = m)`.
    pub fn x_given_message(&self, j: usize, m: u32) -> Vec<f64> {
        let pm = logspace::sum(self.atoms.iter().filter(|a| a.labels[j] == m).map(|a| a.log2_prob));
        (0..self.x.len())
            .map(|c| logspace::sum(self.atoms.iter().filter(|a| a.labels[j] == m).map(|a| a.log2_prob + a.x_log2[c])) - pm)
            .collect()
    }
}

fn check_mass(total: f64) -> Result<()> {
    if (total - 1.0).abs() > crate::prob::ROW_SUM_TOL {
        return Err(Error::InvalidDistribution(format!("joint law sums to {total:.17}")));
    }
    Ok(())
}

fn check_labels(labels: &[u32], sizes: &[usize]) -> Result<()> {
    if labels.len() != sizes.len() || labels.iter().zip(sizes).any(|(&m, &s)| m as usize >= s) {
        return Err(Error::InvalidDistribution(format!("message labels {labels:?} do not fit sizes {sizes:?}")));
    }
    Ok(())
}

/// The `n`-fold channel restricted to a sequence space: `log2 w^n(y-class | x)`.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    channel: Channel,
    y: SequenceSpace,
    kernel: Vec<f64>,
}

impl ChannelModel {
    pub fn new(x: &SequenceSpace, w: &Channel, caps: &Caps) -> Result<Self> {
        if x.alphabet() != w.inputs() {
            return Err(Error::InvalidChannel("channel input alphabet does not match the source".into()));
        }
        match x.tier() {
            Tier::Types => Self::by_types(x, w, caps),
            Tier::Explicit => Self::by_sequences(x, w, caps),
        }
    }

    fn by_sequences(x: &SequenceSpace, w: &Channel, caps: &Caps) -> Result<Self> {
        let y = SequenceSpace::all_sequences(x.n(), w.outputs(), caps)?;
        let cells = (x.len() * y.len()) as f64;
        let cap = 16.0 * caps.max_sequences as f64;
        if cells > cap {
            return Err(Error::cap("channel kernel cells", cells, cap));
        }
        let mut kernel = Vec::with_capacity(x.len() * y.len());
        let logw: Vec<Vec<f64>> = w.rows().iter().map(|r| r.probs().iter().map(|p| p.log2()).collect()).collect();
        for xc in x.classes() {
            for yc in y.classes() {
                kernel.push(xc.label.iter().zip(&yc.label).map(|(&a, &b)| logw[a as usize][b as usize]).sum());
            }
        }
        Ok(ChannelModel { channel: w.clone(), y, kernel })
    }

    fn by_types(x: &SequenceSpace, w: &Channel, caps: &Caps) -> Result<Self> {
        let n = x.n();
        let ny = w.outputs();
        let y = SequenceSpace::types(n, ny, caps)?;
        let radix = n + 1;
        let dense = (radix as f64).powi(ny as i32 - 1);
        if dense > caps.max_types as f64 {
            return Err(Error::cap("output type table", dense, caps.max_types as f64));
        }
        let dense = dense as usize;
        let key = |v: &[u32]| v[..ny - 1].iter().rev().fold(0usize, |k, &c| k * radix + c as usize);
        let lf = LogFactorials::new(n);
        let mut per_letter: BTreeMap<(usize, u32), Vec<(usize, f64)>> = BTreeMap::new();
        let mut kernel = Vec::with_capacity(x.len() * y.len());
        let mut table = vec![f64::NEG_INFINITY; dense];
        for xc in x.classes() {
            let mut dist: Vec<(usize, f64)> = vec![(0, 0.0)];
            for (a, &na) in xc.label.iter().enumerate() {
                if na == 0 {
                    continue;
                }
                let comp = per_letter.entry((a, na)).or_insert_with(|| {
                    enumerate_types(na as usize, ny, caps)
                        .expect("bounded by output type count")
                        .into_iter()
                        .filter_map(|v| {
                            let mut lp = lf.multinomial(&v);
                            for (b, &c) in v.iter().enumerate() {
                                if c > 0 {
                                    lp += c as f64 * w.get(a, b).log2();
                                }
                            }
                            (lp > f64::NEG_INFINITY).then(|| (key(&v), lp))
                        })
                        .collect()
                });
                let mut touched = Vec::new();
                for &(k1, l1) in &dist {
                    for &(k2, l2) in comp.iter() {
                        let k = k1 + k2;
                        if table[k] == f64::NEG_INFINITY {
                            touched.push(k);
                        }
                        table[k] = logspace::add(table[k], l1 + l2);
                    }
                }
                dist = touched.iter().map(|&k| (k, table[k])).collect();
                for &k in &touched {
                    table[k] = f64::NEG_INFINITY;
                }
            }
            for &(k, l) in &dist {
                table[k] = l;
            }
            for yc in y.classes() {
                kernel.push(table[key(&yc.label)]);
            }
            for &(k, _) in &dist {
                table[k] = f64::NEG_INFINITY;
            }
        }
        Ok(ChannelModel { channel: w.clone(), y, kernel })
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    /// Number of input classes.
    pub fn x_len(&self) -> usize {
        self.kernel.len() / self.y.len()
    }

    pub fn y(&self) -> &SequenceSpace {
        &self.y
    }

    /// `log2 w^n(y-class | x)` for any `x` in class `xc`.
    pub fn log_k(&self, xc: usize, yc: usize) -> f64 {
        self.kernel[xc * self.y.len() + yc]
    }

    pub fn row(&self, xc: usize) -> &[f64] {
        let m = self.y.len();
        &self.kernel[xc * m..(xc + 1) * m]
    }

    /// `log2 p(y-class)` for an input law given as `log2 p(x-class)`.
    pub fn output_log(&self, x_log2: &[f64]) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; self.y.len()];
        for (xc, &lx) in x_log2.iter().enumerate() {
            if lx == f64::NEG_INFINITY {
                continue;
            }
            for (o, k) in out.iter_mut().zip(self.row(xc)) {
                *o = logspace::add(*o, lx + k);
            }
        }
        out
    }

    /// `w^n(B | x)` for `x` in class `xc` and `B` a union of output classes.
    pub fn event_prob(&self, xc: usize, b: &[bool]) -> f64 {
        logspace::sum(self.row(xc).iter().zip(b).filter(|(_, &inb)| inb).map(|(k, _)| *k)).exp2()
    }
}

/// A deterministic function `U = f(messages, X)` with dense labels.
#[derive(Clone, Debug)]
pub struct Labeling {
    /// `labels[atom][x-class]`; `u32::MAX` on zero-probability cells.
    pub labels: Vec<Vec<u32>>,
    pub names: Vec<String>,
}

impl Labeling {
    pub const NONE: u32 = u32::MAX;

    pub fn count(&self) -> usize {
        self.names.len()
    }

    /// Interns `key(atom, x-class)` over positive-probability cells, in key order.
    pub fn from_keys<K: Ord + Clone + std::fmt::Debug>(source: &JointSource, key: impl Fn(usize, usize) -> K) -> Self {
        let mut seen: BTreeMap<K, u32> = BTreeMap::new();
        for (a, atom) in source.atoms().iter().enumerate() {
            for (c, lx) in atom.x_log2.iter().enumerate() {
                if *lx > f64::NEG_INFINITY {
                    seen.entry(key(a, c)).or_insert(0);
                }
            }
        }
        let names: Vec<String> = seen.keys().map(|k| format!("{k:?}")).collect();
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
                    .map(|(c, lx)| if *lx > f64::NEG_INFINITY { seen[&key(a, c)] } else { Self::NONE })
                    .collect()
            })
            .collect();
        Labeling { labels, names }
    }

    pub fn constant(source: &JointSource) -> Self {
        Self::from_keys(source, |_, _| 0u8)
    }

    /// The type of `X`.
    pub fn input_type(source: &JointSource) -> Self {
        Self::from_keys(source, |_, c| source.space().type_counts(c))
    }

    /// `(U_1, ..., U_k)`.
    pub fn product(source: &JointSource, parts: &[&Labeling]) -> Self {
        Self::from_keys(source, |a, c| parts.iter().map(|l| l.labels[a][c]).collect::<Vec<_>>())
    }

    pub fn get(&self, atom: usize, xc: usize) -> u32 {
        self.labels[atom][xc]
    }

    /// `log2 p_U(u)` for every label.
    pub fn log_probs(&self, source: &JointSource) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; self.count()];
        for (a, atom) in source.atoms().iter().enumerate() {
            for (c, lx) in atom.x_log2.iter().enumerate() {
                let u = self.labels[a][c];
                if u != Self::NONE {
                    out[u as usize] = logspace::add(out[u as usize], atom.log2_prob + lx);
                }
            }
        }
        out
    }

    /// `log2 p(M_j = m | U = u)` for every `m`.
    pub fn message_given(&self, source: &JointSource, u: u32, j: usize) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; source.message_sizes()[j]];
        for (a, atom) in source.atoms().iter().enumerate() {
            let w = logspace::sum(atom.x_log2.iter().enumerate().filter(|(c, _)| self.labels[a][*c] == u).map(|(_, l)| *l));
            let m = atom.labels[j] as usize;
            out[m] = logspace::add(out[m], atom.log2_prob + w);
        }
        let total = logspace::sum(out.iter().copied());
        out.iter().map(|v| v - total).collect()
    }
}

/// One message value in a [`ConditionalTable`].
#[derive(Clone, Debug)]
pub struct CondRow {
    pub m: u32,
    /// `log2 p(m | u)`.
    pub log2_pm: f64,
    /// `log2 p(y-class | m, u)`.
    pub y_log2: Vec<f64>,
}

/// The law of `(M_j, Y)` given `U = u`, with per-sequence surprisals.
#[derive(Clone, Debug)]
pub struct ConditionalTable {
    pub u: u32,
    pub log2_pu: f64,
    pub rows: Vec<CondRow>,
    y_log2_sizes: Vec<f64>,
}

impl ConditionalTable {
    /// Rows are indexed by `M_j` when `component` is `Some(j)`, otherwise a single row.
    pub fn new(source: &JointSource, model: &ChannelModel, labeling: &Labeling, u: u32, component: Option<usize>) -> Self {
        let nxc = source.space().len();
        let mut by_m: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for (a, atom) in source.atoms().iter().enumerate() {
            let m = component.map_or(0, |j| atom.labels[j]);
            let acc = by_m.entry(m).or_insert_with(|| vec![f64::NEG_INFINITY; nxc]);
            for c in 0..nxc {
                if labeling.labels[a][c] == u {
                    acc[c] = logspace::add(acc[c], atom.log2_prob + atom.x_log2[c]);
                }
            }
        }
        let mut rows = Vec::new();
        let mut joint = Vec::new();
        for (m, xw) in by_m {
            let pmu = logspace::sum(xw.iter().copied());
            if pmu == f64::NEG_INFINITY {
                continue;
            }
            let y_log2 = model.output_log(&xw).into_iter().map(|v| v - pmu).collect();
            joint.push(pmu);
            rows.push(CondRow { m, log2_pm: pmu, y_log2 });
        }
        let log2_pu = logspace::sum(joint.iter().copied());
        for r in &mut rows {
            r.log2_pm -= log2_pu;
        }
        let y_log2_sizes = model.y().classes().iter().map(|c| c.log2_size).collect();
        ConditionalTable { u, log2_pu, rows, y_log2_sizes }
    }

    /// `h(y | m, u)` for any `y` in class `yc`.
    pub fn h(&self, row: usize, yc: usize) -> f64 {
        self.y_log2_sizes[yc] - self.rows[row].y_log2[yc]
    }

    /// `(row, y-class, p(m, y-class | u), h(y | m, u))` over positive cells.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(r, row)| {
            row.y_log2
                .iter()
                .enumerate()
                .filter(|(_, l)| **l > f64::NEG_INFINITY)
                .map(move |(yc, l)| (r, yc, (row.log2_pm + l).exp2(), self.h(r, yc)))
        })
    }

    /// `H(Y | M_j, U = u)`.
    pub fn entropy(&self) -> f64 {
        self.cells().map(|(_, _, p, h)| p * h).sum()
    }

    /// Probability of the cells where `pred(row, y-class, h)` holds.
    pub fn prob_where(&self, pred: impl Fn(usize, usize, f64) -> bool) -> f64 {
        self.cells().filter(|&(r, yc, _, h)| pred(r, yc, h)).map(|(_, _, p, _)| p).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn type_kernel_matches_explicit() {
        let caps = Caps::default();
        let w = Channel::new(vec![vec![0.7, 0.2, 0.1], vec![0.05, 0.15, 0.8]]).unwrap();
        let p = Pmf::new(vec![0.35, 0.65]).unwrap();
        let n = 5;
        let ts = JointSource::iid(n, &p, &caps).unwrap();
        let es = JointSource::explicit_iid(n, &p, &caps).unwrap();
        let tm = ChannelModel::new(ts.space(), &w, &caps).unwrap();
        let em = ChannelModel::new(es.space(), &w, &caps).unwrap();
        let ty = tm.output_log(&ts.x_marginal());
        let ey = em.output_log(&es.x_marginal());
        for (yc, c) in em.y().classes().iter().enumerate() {
            let t = tm.y().class_of(&c.label).unwrap();
            assert!(approx(ey[yc], ty[t] - tm.y().log2_size(t)));
        }
    }

    #[test]
    fn kernel_rows_sum_to_one() {
        let caps = Caps::default();
        let w = Channel::bsc(0.1).unwrap();
        let s = JointSource::iid(50, &Pmf::uniform(2), &caps).unwrap();
        let m = ChannelModel::new(s.space(), &w, &caps).unwrap();
        for xc in 0..s.space().len() {
            assert!(approx(logspace::sum(m.row(xc).iter().copied()), 0.0));
        }
    }

    #[test]
    fn conditional_table_entropy_matches_direct() {
        let caps = Caps::default();
        let w = Channel::bsc(0.2).unwrap();
        let parts = vec![
            (vec![0], 0.5, Pmf::new(vec![0.9, 0.1]).unwrap()),
            (vec![1], 0.5, Pmf::new(vec![0.3, 0.7]).unwrap()),
        ];
        let s = JointSource::iid_mixture(6, 2, vec![2], parts, &caps).unwrap();
        let m = ChannelModel::new(s.space(), &w, &caps).unwrap();
        let l = Labeling::constant(&s);
        let t = ConditionalTable::new(&s, &m, &l, 0, Some(0));
        let expect = 6.0 * 0.5 * (Channel::bsc(0.2).unwrap().output(&Pmf::new(vec![0.9, 0.1]).unwrap()).entropy()
            + Channel::bsc(0.2).unwrap().output(&Pmf::new(vec![0.3, 0.7]).unwrap()).entropy());
        assert!(approx(t.entropy(), expect));
        let total: f64 = t.cells().map(|c| c.2).sum();
        assert!(approx(total, 1.0));
    }
}
