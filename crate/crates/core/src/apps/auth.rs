use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{binary_entropy, conditional_entropy_joint, mutual_information_joint, Channel, Pmf};
use crate::stabilizer::eps_n;
use crate::types::{enumerate_conditional_types, type_of, Caps};

/// Largest output space `|Y|^n` the exact evaluators accept.
pub const MAX_OUTPUT_SEQUENCES: usize = 4096;

/// A keyed authentication code: `X = F(M, K)` is sent over `ws` to the
/// receiver and over `wi` to the interloper, who wins by producing any
/// `y in S(K)`.
#[derive(Clone, Debug, Serialize)]
pub struct AuthScenario {
    pub ws: Channel,
    pub wi: Channel,
    pub n: usize,
    pub key: Pmf,
    pub message: Pmf,
    /// `encoder[m][k]`: the codeword for message `m` under key `k`.
    pub encoder: Vec<Vec<Vec<u32>>>,
    /// `sets[k]`: output sequences accepted under key `k`.
    pub sets: Vec<Vec<Vec<u32>>>,
}

/// On-disk scenario. Probabilities are decimal strings; `keys` defaults to
/// uniform and `messages` to a single message. Without `authentic_sets`,
/// `S(k) = {y : -log2 ws^n(y | F(0, k)) <= threshold}`.
///
/// ```json
/// {"n": 2, "encoder": [[[0, 0], [1, 1]]], "authentic_sets": [[[0, 0]], [[1, 1]]]}
/// ```
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuthScenarioFile {
    pub n: usize,
    #[serde(default)]
    pub keys: Option<Vec<String>>,
    #[serde(default)]
    pub messages: Option<Vec<String>>,
    pub encoder: Vec<Vec<Vec<u32>>>,
    #[serde(default)]
    pub authentic_sets: Option<Vec<Vec<Vec<u32>>>>,
    #[serde(default)]
    pub threshold: Option<f64>,
}

fn parse_pmf(v: &[String]) -> Result<Pmf> {
    let p = v
        .iter()
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad probability {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Pmf::new(p)
}

impl AuthScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn into_scenario(self, ws: Channel, wi: Channel) -> Result<AuthScenario> {
        let nk = self.encoder.first().map_or(0, |r| r.len());
        let key = match &self.keys {
            Some(v) => parse_pmf(v)?,
            None if nk > 0 => Pmf::uniform(nk),
            None => return Err(Error::precondition("encoder has no keys")),
        };
        let message = match &self.messages {
            Some(v) => parse_pmf(v)?,
            None => Pmf::uniform(self.encoder.len().max(1)),
        };
        let sets = match (self.authentic_sets, self.threshold) {
            (Some(s), _) => s,
            (None, Some(t)) => threshold_sets(&ws, self.n, &self.encoder, t)?,
            (None, None) => return Err(Error::precondition("scenario needs authentic_sets or a threshold")),
        };
        AuthScenario::new(ws, wi, self.n, key, message, self.encoder, sets)
    }
}

/// `S(k) = {y : -log2 ws^n(y | F(0, k)) <= threshold}`.
pub fn threshold_sets(ws: &Channel, n: usize, encoder: &[Vec<Vec<u32>>], threshold: f64) -> Result<Vec<Vec<Vec<u32>>>> {
    let space = OutputSpace::new(ws.outputs(), n)?;
    let first = encoder.first().ok_or_else(|| Error::precondition("encoder has no messages"))?;
    Ok(first
        .iter()
        .map(|x| {
            let probs = space.channel_vector(ws, x);
            (0..space.size).filter(|&y| probs[y] > 0.0 && -probs[y].log2() <= threshold).map(|y| space.seq(y)).collect()
        })
        .collect())
}

impl AuthScenario {
    pub fn new(
        ws: Channel,
        wi: Channel,
        n: usize,
        key: Pmf,
        message: Pmf,
        encoder: Vec<Vec<Vec<u32>>>,
        sets: Vec<Vec<Vec<u32>>>,
    ) -> Result<Self> {
        if ws.inputs() != wi.inputs() || ws.outputs() != wi.outputs() {
            return Err(Error::precondition("ws and wi must share input and output alphabets"));
        }
        if n == 0 {
            return Err(Error::precondition("blocklength must be positive"));
        }
        OutputSpace::new(ws.outputs(), n)?;
        if encoder.len() != message.len() || encoder.iter().any(|r| r.len() != key.len()) {
            return Err(Error::precondition("encoder must have one row per message and one codeword per key"));
        }
        let nx = ws.inputs() as u32;
        if encoder.iter().flatten().any(|x| x.len() != n || x.iter().any(|&s| s >= nx)) {
            return Err(Error::precondition(format!("codewords must be length-{n} sequences over {nx} letters")));
        }
        if sets.len() != key.len() {
            return Err(Error::precondition("need one authentic set per key"));
        }
        let ny = ws.outputs() as u32;
        if sets.iter().flatten().any(|y| y.len() != n || y.iter().any(|&s| s >= ny)) {
            return Err(Error::precondition(format!("authentic sets must hold length-{n} sequences over {ny} letters")));
        }
        Ok(AuthScenario { ws, wi, n, key, message, encoder, sets })
    }
}

/// `Y^n` indexed in base `|Y|`, first letter most significant.
struct OutputSpace {
    ny: usize,
    n: usize,
    size: usize,
}

impl OutputSpace {
    fn new(ny: usize, n: usize) -> Result<Self> {
        let size = (ny as f64).powi(n as i32);
        if size > MAX_OUTPUT_SEQUENCES as f64 {
            return Err(Error::cap("output sequences", size, MAX_OUTPUT_SEQUENCES as f64));
        }
        Ok(OutputSpace { ny, n, size: size as usize })
    }

    fn index(&self, y: &[u32]) -> usize {
        y.iter().fold(0, |acc, &s| acc * self.ny + s as usize)
    }

    fn seq(&self, mut i: usize) -> Vec<u32> {
        let mut y = vec![0u32; self.n];
        for slot in y.iter_mut().rev() {
            *slot = (i % self.ny) as u32;
            i /= self.ny;
        }
        y
    }

    /// `w^n(. | x)` over every output sequence.
    fn channel_vector(&self, w: &Channel, x: &[u32]) -> Vec<f64> {
        (0..self.size)
            .map(|yi| self.seq(yi).iter().zip(x).map(|(&y, &xx)| w.get(xx as usize, y as usize)).product())
            .collect()
    }
}

/// Indexed view of a scenario shared by the attack and the bounds.
struct Tables {
    space: OutputSpace,
    nk: usize,
    /// `(m, k, codeword type, p(m) p(k))` per codeword.
    cells: Vec<(usize, usize, Vec<u32>, f64)>,
    member: Vec<Vec<bool>>,
    sets: Vec<Vec<usize>>,
}

impl Tables {
    fn new(s: &AuthScenario) -> Result<Self> {
        let space = OutputSpace::new(s.ws.outputs(), s.n)?;
        let nk = s.key.len();
        let mut cells = Vec::new();
        for (m, row) in s.encoder.iter().enumerate() {
            for (k, x) in row.iter().enumerate() {
                let p = s.message.prob(m) * s.key.prob(k);
                if p > 0.0 {
                    cells.push((m, k, type_of(x, s.ws.inputs()), p));
                }
            }
        }
        let mut member = vec![vec![false; space.size]; nk];
        let mut sets = Vec::with_capacity(nk);
        for (k, set) in s.sets.iter().enumerate() {
            let mut idx = Vec::with_capacity(set.len());
            for i in set.iter().map(|y| space.index(y)) {
                if !member[k][i] {
                    member[k][i] = true;
                    idx.push(i);
                }
            }
            sets.push(idx);
        }
        Ok(Tables { space, nk, cells, member, sets })
    }

    /// `p(y', k)` through `w` over codewords whose type satisfies `keep`.
    fn joint_yk(&self, s: &AuthScenario, w: &Channel, keep: impl Fn(&[u32]) -> bool) -> Vec<Vec<f64>> {
        let mut joint = vec![vec![0.0; self.nk]; self.space.size];
        for (m, k, t, p) in &self.cells {
            if !keep(t) {
                continue;
            }
            let v = self.space.channel_vector(w, &s.encoder[*m][*k]);
            for (y, q) in v.iter().enumerate() {
                joint[y][*k] += p * q;
            }
        }
        joint
    }

    /// The impostor's output for a guessed key: a sequence only that key accepts, if any.
    fn representative(&self, k: usize) -> Option<usize> {
        let set = &self.sets[k];
        set.iter()
            .copied()
            .find(|&y| (0..self.nk).all(|j| j == k || !self.member[j][y]))
            .or_else(|| set.first().copied())
    }

    /// Types of codewords with positive probability, with `p(u)`.
    fn types(&self) -> Vec<(Vec<u32>, f64)> {
        let mut by: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (_, _, t, p) in &self.cells {
            *by.entry(t.clone()).or_default() += p;
        }
        by.into_iter().collect()
    }

    /// `sum_{y',k} p(y',k) sum_y psi(y|y') 1{y in S(k)}` for `psi` given row by row.
    fn strategy_success(&self, pyk: &[Vec<f64>], psi: impl Fn(usize) -> Vec<(usize, f64)>) -> f64 {
        let mut total = 0.0;
        for (yp, row) in pyk.iter().enumerate() {
            if row.iter().all(|v| *v == 0.0) {
                continue;
            }
            for (y, q) in psi(yp) {
                total += q * (0..self.nk).filter(|&k| self.member[k][y]).map(|k| row[k]).sum::<f64>();
            }
        }
        total
    }
}

/// Success of one explicit attack.
#[derive(Clone, Debug, Serialize)]
pub struct StrategyResult {
    pub name: String,
    pub success: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackResult {
    /// Optimal success `2^{-beta}`.
    pub success: f64,
    pub beta: f64,
    pub strategies: Vec<StrategyResult>,
    /// The optimum is at least every listed strategy.
    pub dominates: bool,
}

fn type_label(t: &[u32]) -> String {
    format!("{t:?}")
}

/// Exact optimal attack: per observed `y'` the best single forgery, plus
/// substitution and impostor attacks at every codeword type and `w in {ws, wi}`.
pub fn brute_force_attack(s: &AuthScenario) -> Result<AttackResult> {
    let tb = Tables::new(s)?;
    let pyk = tb.joint_yk(s, &s.wi, |_| true);
    let mut success = 0.0;
    let mut score = vec![0.0; tb.space.size];
    for row in &pyk {
        score.iter_mut().for_each(|v| *v = 0.0);
        for (k, &p) in row.iter().enumerate() {
            if p > 0.0 {
                for &y in &tb.sets[k] {
                    score[y] += p;
                }
            }
        }
        success += score.iter().copied().fold(0.0, f64::max);
    }

    let key_marginal: Vec<f64> = (0..tb.nk).map(|k| pyk.iter().map(|r| r[k]).sum()).collect();
    let mut strategies = Vec::new();
    for (t, pu) in tb.types() {
        for (wname, w) in [("ws", &s.ws), ("wi", &s.wi)] {
            let cond = tb.joint_yk(s, w, |c| c == t.as_slice());
            // Substitution: forge from p_{Y_w|U}(.|u), ignoring the observation.
            let q: Vec<(usize, f64)> = cond.iter().map(|r| r.iter().sum::<f64>() / pu).enumerate().filter(|(_, v)| *v > 0.0).collect();
            let sub: f64 = q
                .iter()
                .map(|&(y, qy)| qy * (0..tb.nk).filter(|&k| tb.member[k][y]).map(|k| key_marginal[k]).sum::<f64>())
                .sum();
            strategies.push(StrategyResult { name: format!("substitution u={} w={wname}", type_label(&t)), success: sub });
            // Impostor: sample a key from p_{K|Y_w,U}(.|y',u) and forge its representative.
            let prior: Vec<f64> = (0..tb.nk).map(|k| cond.iter().map(|r| r[k]).sum()).collect();
            let imp = tb.strategy_success(&pyk, |yp| {
                let row = &cond[yp];
                let z: f64 = row.iter().sum();
                let post: Vec<f64> = if z > 0.0 { row.iter().map(|v| v / z).collect() } else { prior.iter().map(|v| v / pu).collect() };
                let mut out: BTreeMap<usize, f64> = BTreeMap::new();
                for (k, p) in post.iter().enumerate() {
                    if *p > 0.0 {
                        if let Some(y) = tb.representative(k) {
                            *out.entry(y).or_default() += p;
                        }
                    }
                }
                out.into_iter().collect()
            });
            strategies.push(StrategyResult { name: format!("impostor u={} w={wname}", type_label(&t)), success: imp });
        }
    }
    let dominates = strategies.iter().all(|st| st.success <= success + 1e-12);
    Ok(AttackResult { success, beta: -success.log2(), strategies, dominates })
}

/// One `(u, w)` evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct AuthBoundRow {
    /// `1` for the mutual-information expression, `2` for the entropy expression.
    pub bound: u8,
    /// The codeword type `t_u`.
    pub u: Vec<u32>,
    pub p_u: f64,
    /// `ws`, `wi`, or a conditional type written as its joint counts.
    pub w: String,
    /// `Pr(Y_w in S(K) | u)`.
    pub accept: f64,
    pub eligible: bool,
    /// `I(K;Y_w|u) + h(u)` or `H(K|Y_w,u) + n D(w||wi|t_u) + h(u)`.
    pub main: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuthReport {
    pub n: usize,
    pub eps_n: f64,
    pub success: f64,
    pub beta: f64,
    /// `17 2^{-n eps_n}`.
    pub threshold: f64,
    /// Some `(u, w)` passes the eligibility test of the first expression.
    pub threshold_binds: bool,
    /// Infimum of the first expression over eligible pairs; `None` if no pair is eligible.
    pub bound1: Option<f64>,
    pub bound2: Option<f64>,
    /// `-n sqrt(eps_n) log2 eps_n` with unit constant, never added to the bounds.
    pub order: f64,
    /// `bound + order - beta`.
    pub slack1: Option<f64>,
    pub slack2: Option<f64>,
    /// `(I(K;Y_ws) + H2(a)) / a` with `a = Pr(Y_ws in S(K))`.
    pub simmons: Option<f64>,
    /// `H(K|Y_wi)`; undefined if some key accepts nothing.
    pub maurer: Option<f64>,
    /// First expression at `w = ws`, minimised over `u`, is at most the Simmons form.
    pub new_le_simmons: Option<bool>,
    /// Second expression at `w = wi`, minimised over `u`, is at most the Maurer form.
    pub new_le_maurer: Option<bool>,
    pub attack: AttackResult,
    pub rows: Vec<AuthBoundRow>,
}

impl AuthReport {
    /// `beta` respects every evaluated bound.
    pub fn ok(&self) -> bool {
        self.attack.dominates
            && self.slack1.map_or(true, |s| s >= -1e-9)
            && self.slack2.map_or(true, |s| s >= -1e-9)
            && self.simmons.map_or(true, |b| self.beta <= b + 1e-9)
            && self.maurer.map_or(true, |b| self.beta <= b + 1e-9)
    }
}

fn accept_prob(tb: &Tables, joint: &[Vec<f64>]) -> f64 {
    joint.iter().enumerate().map(|(y, r)| (0..tb.nk).filter(|&k| tb.member[k][y]).map(|k| r[k]).sum::<f64>()).sum()
}

fn normalized(joint: &[Vec<f64>], z: f64) -> Vec<Vec<f64>> {
    joint.iter().map(|r| r.iter().map(|v| v / z).collect()).collect()
}

/// Both exponent bounds with the conditioning variable taken to be the
/// codeword type. Candidates for `w` are `ws`, `wi` and every conditional
/// type `P_n(Y|t_u)`; the second expression uses conditional types only.
pub fn auth_bounds(s: &AuthScenario, caps: &Caps) -> Result<AuthReport> {
    let tb = Tables::new(s)?;
    let attack = brute_force_attack(s)?;
    let (nx, ny) = (s.ws.inputs(), s.ws.outputs());
    let e = eps_n(s.n, nx, ny);
    let nf = s.n as f64;
    let threshold = 17.0 * (-nf * e).exp2();
    let order = -nf * e.sqrt() * e.log2();

    let mut rows = Vec::new();
    for (t, pu) in tb.types() {
        let hu = -pu.log2();
        let tpmf = Pmf::new(t.iter().map(|&c| c as f64 / nf).collect())?;
        let mut cands: Vec<(String, Channel, bool)> = vec![("ws".into(), s.ws.clone(), false), ("wi".into(), s.wi.clone(), false)];
        for ct in enumerate_conditional_types(&t, ny, caps)? {
            cands.push((format!("{:?}", ct.counts), ct.as_channel(), true));
        }
        for (name, w, is_type) in cands {
            let joint = normalized(&tb.joint_yk(s, &w, |c| c == t.as_slice()), pu);
            let accept = accept_prob(&tb, &joint);
            let eligible = accept > threshold;
            rows.push(AuthBoundRow {
                bound: 1,
                u: t.clone(),
                p_u: pu,
                w: name.clone(),
                accept,
                eligible,
                main: mutual_information_joint(&joint) + hu,
            });
            let is_wi = name == "wi";
            if is_type || is_wi {
                let d = w.divergence(&s.wi, &tpmf);
                rows.push(AuthBoundRow {
                    bound: 2,
                    u: t.clone(),
                    p_u: pu,
                    w: name,
                    accept,
                    eligible: is_type,
                    main: conditional_entropy_joint(&joint) + nf * d + hu,
                });
            }
        }
    }
    let inf = |b: u8| {
        rows.iter().filter(|r| r.bound == b && r.eligible && r.main.is_finite()).map(|r| r.main).min_by(f64::total_cmp)
    };
    let bound1 = inf(1);
    let bound2 = inf(2);
    let threshold_binds = bound1.is_some();

    let ws_joint = tb.joint_yk(s, &s.ws, |_| true);
    let a = accept_prob(&tb, &ws_joint);
    let simmons = (a > 0.0).then(|| (mutual_information_joint(&ws_joint) + binary_entropy(a)) / a);
    let all_accept = (0..tb.nk).all(|k| s.key.prob(k) == 0.0 || !tb.sets[k].is_empty());
    let maurer = all_accept.then(|| conditional_entropy_joint(&tb.joint_yk(s, &s.wi, |_| true)));
    let at = |b: u8, w: &str| rows.iter().filter(|r| r.bound == b && r.w == w).map(|r| r.main).fold(f64::INFINITY, f64::min);
    let new_le_simmons = simmons.map(|v| at(1, "ws") <= v + 1e-9);
    let new_le_maurer = maurer.map(|v| at(2, "wi") <= v + 1e-9);

    Ok(AuthReport {
        n: s.n,
        eps_n: e,
        success: attack.success,
        beta: attack.beta,
        threshold,
        threshold_binds,
        bound1,
        bound2,
        order,
        slack1: bound1.map(|b| b + order - attack.beta),
        slack2: bound2.map(|b| b + order - attack.beta),
        simmons,
        maurer,
        new_le_simmons,
        new_le_maurer,
        attack,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(n: usize, count: usize) -> Vec<Vec<u32>> {
        let space = OutputSpace::new(2, n).unwrap();
        (0..count).map(|i| space.seq(i)).collect()
    }

    #[test]
    fn noiseless_interloper_reads_the_key() {
        // x = k, S(k) = {k}: the interloper sees the key and forges it.
        let w = Channel::identity(2).unwrap();
        let code = seqs(2, 4);
        let sets = code.iter().map(|x| vec![x.clone()]).collect();
        let s = AuthScenario::new(w.clone(), w, 2, Pmf::uniform(4), Pmf::uniform(1), vec![code], sets).unwrap();
        let a = brute_force_attack(&s).unwrap();
        assert!((a.success - 1.0).abs() < 1e-12 && a.beta.abs() < 1e-12);
        let r = auth_bounds(&s, &Caps::default()).unwrap();
        assert!(r.maurer.unwrap().abs() < 1e-12);
        // Only h(u) remains: the likeliest codeword type has probability 1/2.
        assert!((r.bound2.unwrap() - 1.0).abs() < 1e-9, "{:?}", r.bound2);
        assert!(r.ok());
    }

    #[test]
    fn blind_interloper_guesses() {
        // wi ignores its input; four keys with disjoint singleton sets.
        let ws = Channel::identity(2).unwrap();
        let wi = Channel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let code = seqs(2, 4);
        let sets: Vec<_> = code.iter().map(|x| vec![x.clone()]).collect();
        let s = AuthScenario::new(ws, wi, 2, Pmf::uniform(4), Pmf::uniform(1), vec![code], sets).unwrap();
        let a = brute_force_attack(&s).unwrap();
        assert!((a.success - 0.25).abs() < 1e-12);
        assert!((a.beta - 2.0).abs() < 1e-12);
        // Exhaustive search over deterministic strategies agrees.
        let code_of = |i: usize| OutputSpace::new(2, 2).unwrap().seq(i);
        let mut best = 0.0f64;
        for choice in 0..4usize.pow(4) {
            let mut c = choice;
            let mut total = 0.0;
            for _yp in 0..4 {
                let y = s.sets.iter().position(|set| set[0] == code_of(c % 4)).unwrap();
                c /= 4;
                total += 0.25 * (0..4).filter(|&k| k == y).map(|_| 0.25).sum::<f64>();
            }
            best = best.max(total);
        }
        assert!((best - a.success).abs() < 1e-12);
        assert!(a.dominates);
    }

    #[test]
    fn overlapping_sets_help_the_attacker() {
        let ws = Channel::bsc(0.1).unwrap();
        let wi = Channel::bsc(0.3).unwrap();
        let code = seqs(3, 2);
        let disjoint: Vec<Vec<Vec<u32>>> = vec![vec![vec![0, 0, 0]], vec![vec![0, 0, 1]]];
        let overlap: Vec<Vec<Vec<u32>>> = vec![vec![vec![0, 0, 0], vec![1, 1, 1]], vec![vec![0, 0, 1], vec![1, 1, 1]]];
        let mk = |sets| AuthScenario::new(ws.clone(), wi.clone(), 3, Pmf::uniform(2), Pmf::uniform(1), vec![code.clone()], sets).unwrap();
        let a = brute_force_attack(&mk(disjoint)).unwrap();
        let b = brute_force_attack(&mk(overlap)).unwrap();
        assert!(b.success >= a.success - 1e-15);
        assert!((b.success - 1.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_at_small_n_admits_nothing() {
        let ws = Channel::bsc(0.1).unwrap();
        let code = seqs(3, 2);
        let sets = vec![vec![code[0].clone()], vec![code[1].clone()]];
        let s = AuthScenario::new(ws.clone(), ws, 3, Pmf::uniform(2), Pmf::uniform(1), vec![code], sets).unwrap();
        let r = auth_bounds(&s, &Caps::default()).unwrap();
        assert!(r.threshold > 1.0);
        assert!(!r.threshold_binds && r.bound1.is_none());
        assert!(r.ok());
    }

    #[test]
    fn scenario_file_with_threshold_decoder() {
        let text = r#"{"n": 2, "encoder": [[[0, 0], [1, 1]]], "threshold": 0.5}"#;
        let w = Channel::bsc(0.1).unwrap();
        let s = AuthScenarioFile::parse(text).unwrap().into_scenario(w.clone(), w).unwrap();
        assert_eq!(s.sets, vec![vec![vec![0, 0]], vec![vec![1, 1]]]);
        assert_eq!(s.key.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn output_cap() {
        assert!(matches!(OutputSpace::new(2, 13), Err(Error::ResourceCap { .. })));
        assert!(OutputSpace::new(2, 12).is_ok());
    }
}
