use rand::Rng;
use serde::{Deserialize, Serialize};

use super::channel_capacity;
use crate::error::{Error, Result};
use crate::prob::{Channel, Pmf};
use crate::stabilizer::eps_n;
use crate::verify::{par_map, stream_rng};

/// Main channel `p_{Y|X}`, eavesdropper channel `p_{Z|X}` and auxiliary sizes.
#[derive(Clone, Debug, Serialize)]
pub struct WiretapScenario {
    pub main: Channel,
    pub eve: Channel,
    pub t_size: usize,
    pub v_size: usize,
}

impl WiretapScenario {
    /// Auxiliary sizes at their upper limits `|X| + 2` and `|X|^2 + 4|X| + 2`.
    pub fn new(main: Channel, eve: Channel) -> Result<Self> {
        let nx = main.inputs();
        Self::with_sizes(main, eve, nx + 2, nx * nx + 4 * nx + 2)
    }

    pub fn with_sizes(main: Channel, eve: Channel, t_size: usize, v_size: usize) -> Result<Self> {
        let nx = main.inputs();
        if eve.inputs() != nx {
            return Err(Error::precondition("main and eavesdropper channels must share the input alphabet"));
        }
        if t_size == 0 || t_size > nx + 2 || v_size == 0 || v_size > nx * nx + 4 * nx + 2 {
            return Err(Error::precondition(format!(
                "auxiliary sizes must satisfy 1 <= |T| <= {} and 1 <= |V| <= {}",
                nx + 2,
                nx * nx + 4 * nx + 2
            )));
        }
        Ok(WiretapScenario { main, eve, t_size, v_size })
    }
}

/// A point `p(t) p(v|t) p(x|v)` with its information terms.
#[derive(Clone, Debug, Serialize)]
pub struct WiretapSolution {
    pub p_t: Vec<f64>,
    pub p_v_given_t: Vec<Vec<f64>>,
    pub p_x_given_v: Vec<Vec<f64>>,
    /// `I(Y;V)`.
    pub i_yv: f64,
    /// `I(Y;V|T)`.
    pub i_yv_t: f64,
    /// `I(Z;V|T)`.
    pub i_zv_t: f64,
}

impl WiretapSolution {
    pub fn value(&self, ell: f64) -> f64 {
        self.i_yv.min(self.i_yv_t - self.i_zv_t + ell)
    }
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).log2()).sum()
}

struct Evaluator<'a> {
    main: &'a Channel,
    eve: &'a Channel,
}

impl Evaluator<'_> {
    fn outputs(w: &Channel, p_x_v: &[Vec<f64>]) -> Vec<Vec<f64>> {
        p_x_v
            .iter()
            .map(|px| (0..w.outputs()).map(|y| px.iter().enumerate().map(|(x, p)| p * w.get(x, y)).sum()).collect())
            .collect()
    }

    /// `(I(.;V), I(.;V|T))` for one output channel given `q[v][y]`.
    fn terms(p_t: &[f64], p_v_t: &[Vec<f64>], q: &[Vec<f64>]) -> (f64, f64) {
        let ny = q[0].len();
        let nv = q.len();
        let mut p_v = vec![0.0; nv];
        let mut cond = 0.0;
        for (t, &pt) in p_t.iter().enumerate() {
            if pt == 0.0 {
                continue;
            }
            let row = &p_v_t[t];
            let mut qt = vec![0.0; ny];
            for v in 0..nv {
                p_v[v] += pt * row[v];
                for y in 0..ny {
                    qt[y] += row[v] * q[v][y];
                }
            }
            cond += pt * (0..nv).filter(|&v| row[v] > 0.0).map(|v| row[v] * kl(&q[v], &qt)).sum::<f64>();
        }
        let mut qm = vec![0.0; ny];
        for v in 0..nv {
            for y in 0..ny {
                qm[y] += p_v[v] * q[v][y];
            }
        }
        let marg = (0..nv).filter(|&v| p_v[v] > 0.0).map(|v| p_v[v] * kl(&q[v], &qm)).sum();
        (marg, cond)
    }

    fn solve(&self, p_t: Vec<f64>, p_v_t: Vec<Vec<f64>>, p_x_v: Vec<Vec<f64>>) -> WiretapSolution {
        let qy = Self::outputs(self.main, &p_x_v);
        let qz = Self::outputs(self.eve, &p_x_v);
        let (i_yv, i_yv_t) = Self::terms(&p_t, &p_v_t, &qy);
        let (_, i_zv_t) = Self::terms(&p_t, &p_v_t, &qz);
        WiretapSolution { p_t, p_v_given_t: p_v_t, p_x_given_v: p_x_v, i_yv, i_yv_t, i_zv_t }
    }
}

const STEPS: [f64; 6] = [1.0, 0.5, 0.2, 0.05, 0.01, 0.002];
const MAX_SWEEPS: usize = 400;

#[derive(Clone, Copy)]
enum Block {
    T,
    VGivenT(usize),
    XGivenV(usize),
}

fn row_mut(s: &mut (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>), b: Block) -> &mut Vec<f64> {
    match b {
        Block::T => &mut s.0,
        Block::VGivenT(t) => &mut s.1[t],
        Block::XGivenV(v) => &mut s.2[v],
    }
}

/// Coordinate ascent from one starting point: each row moves toward the
/// vertex and step that most improve the objective.
fn ascend(ev: &Evaluator<'_>, start: WiretapSolution, ell: f64, tol: f64) -> WiretapSolution {
    let mut state = (start.p_t, start.p_v_given_t, start.p_x_given_v);
    let mut best = ev.solve(state.0.clone(), state.1.clone(), state.2.clone()).value(ell);
    let mut blocks = vec![Block::T];
    blocks.extend((0..state.1.len()).map(Block::VGivenT));
    blocks.extend((0..state.2.len()).map(Block::XGivenV));
    for _ in 0..MAX_SWEEPS {
        let before = best;
        for &b in &blocks {
            let k = row_mut(&mut state, b).len();
            let original = row_mut(&mut state, b).clone();
            let mut chosen: Option<Vec<f64>> = None;
            for j in 0..k {
                for &s in &STEPS {
                    let cand: Vec<f64> =
                        original.iter().enumerate().map(|(i, &p)| (1.0 - s) * p + if i == j { s } else { 0.0 }).collect();
                    *row_mut(&mut state, b) = cand.clone();
                    let val = ev.solve(state.0.clone(), state.1.clone(), state.2.clone()).value(ell);
                    if val > best + 1e-15 {
                        best = val;
                        chosen = Some(cand);
                    }
                }
            }
            *row_mut(&mut state, b) = chosen.unwrap_or(original);
        }
        if best - before < tol {
            break;
        }
    }
    ev.solve(state.0, state.1, state.2)
}

fn random_start<R: Rng>(rng: &mut R, s: &WiretapScenario) -> WiretapSolution {
    let nx = s.main.inputs();
    let p_t = Pmf::random(rng, s.t_size, 1.0).probs().to_vec();
    let p_v_t = (0..s.t_size).map(|_| Pmf::random(rng, s.v_size, 1.0).probs().to_vec()).collect();
    let p_x_v = (0..s.v_size).map(|_| Pmf::random(rng, nx, 1.0).probs().to_vec()).collect();
    WiretapSolution { p_t, p_v_given_t: p_v_t, p_x_given_v: p_x_v, i_yv: 0.0, i_yv_t: 0.0, i_zv_t: 0.0 }
}

/// A certified lower bound on `c(ell)` with the point that attains it.
#[derive(Clone, Debug, Serialize)]
pub struct WiretapEstimate {
    pub ell: f64,
    pub value: f64,
    pub solution: WiretapSolution,
    pub restarts: usize,
    pub seed: u64,
}

/// Best value of `min(I(Y;V), I(Y;V|T) - I(Z;V|T) + ell)` found by coordinate
/// ascent from `restarts` Dirichlet starting points, plus `warm` if given.
///
/// The problem is not concave, so only a lower bound is certified.
pub fn wiretap_c(
    s: &WiretapScenario,
    ell: f64,
    restarts: usize,
    tol: f64,
    seed: u64,
    threads: usize,
    warm: Option<&WiretapSolution>,
) -> Result<WiretapEstimate> {
    if !(ell >= 0.0) || !(tol > 0.0) || restarts == 0 {
        return Err(Error::precondition("need ell >= 0, tol > 0 and at least one restart"));
    }
    let ev = Evaluator { main: &s.main, eve: &s.eve };
    let idx: Vec<usize> = (0..restarts).collect();
    let mut found = par_map(&idx, threads, |i, _| {
        let mut rng = stream_rng(seed, i as u64);
        ascend(&ev, random_start(&mut rng, s), ell, tol)
    });
    if let Some(w) = warm {
        found.push(ascend(&ev, w.clone(), ell, tol));
    }
    let best = found
        .into_iter()
        .fold(None::<WiretapSolution>, |acc, x| match acc {
            Some(a) if a.value(ell) >= x.value(ell) => Some(a),
            _ => Some(x),
        })
        .expect("at least one restart");
    Ok(WiretapEstimate { ell, value: best.value(ell), solution: best, restarts, seed })
}

/// `c(ell)` over increasing `ells`, each warm-started from the previous
/// optimum, so the estimates are non-decreasing.
pub fn wiretap_sweep(
    s: &WiretapScenario,
    ells: &[f64],
    restarts: usize,
    tol: f64,
    seed: u64,
    threads: usize,
) -> Result<Vec<WiretapEstimate>> {
    if ells.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::precondition("leakage values must be sorted"));
    }
    let mut out: Vec<WiretapEstimate> = Vec::with_capacity(ells.len());
    for (k, &ell) in ells.iter().enumerate() {
        let warm = out.last().map(|e| e.solution.clone());
        let est = wiretap_c(s, ell, restarts, tol, crate::verify::derive_seed(seed, k as u64), threads, warm.as_ref())?;
        out.push(est);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    WeakLeakage,
    Variational,
}

/// The binding rate bound for a `(delta, ell)` code.
#[derive(Clone, Debug, Serialize)]
pub struct WiretapBound {
    pub metric: Metric,
    pub delta: f64,
    pub ell: f64,
    /// Where `c` is evaluated: `ell/(1-delta)` for weak leakage, `0` for variational.
    pub effective_ell: Option<f64>,
    /// `c(0)` or `c(ell/(1-delta))` when a `c` branch binds, else the main-channel capacity.
    pub bound: f64,
    pub branch: String,
    pub capacity: f64,
    pub estimate: Option<WiretapEstimate>,
    /// `-sqrt(eps_n) log2 eps_n` with unit constant, reported beside the bound.
    pub order_slack: Option<f64>,
}

/// Weak leakage: `r <= c(ell/(1-delta))`. Variational: `r < c(0)` if
/// `delta + ell < 1`, else the main-channel capacity.
pub fn wiretap_bounds(
    s: &WiretapScenario,
    metric: Metric,
    delta: f64,
    ell: f64,
    n: Option<usize>,
    restarts: usize,
    tol: f64,
    seed: u64,
    threads: usize,
) -> Result<WiretapBound> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::precondition(format!("delta must lie in (0, 1), got {delta}")));
    }
    match metric {
        Metric::WeakLeakage if !(ell >= 0.0) => return Err(Error::precondition("weak leakage needs ell >= 0")),
        Metric::Variational if !(ell > 0.0 && ell <= 1.0) => {
            return Err(Error::precondition("variational leakage needs ell in (0, 1]"))
        }
        _ => {}
    }
    let capacity = channel_capacity(&s.main, 1e-9)?.capacity;
    let effective = match metric {
        Metric::WeakLeakage => Some(ell / (1.0 - delta)),
        Metric::Variational if delta + ell < 1.0 => Some(0.0),
        Metric::Variational => None,
    };
    let (bound, estimate, branch) = match effective {
        Some(e) => {
            let est = wiretap_c(s, e, restarts, tol, seed, threads, None)?;
            (est.value, Some(est), if metric == Metric::WeakLeakage { "c(ell/(1-delta))" } else { "c(0)" })
        }
        None => (capacity, None, "capacity"),
    };
    let order_slack = n.map(|n| {
        let e = eps_n(n, s.main.inputs(), s.main.outputs());
        -e.sqrt() * e.log2()
    });
    Ok(WiretapBound { metric, delta, ell, effective_ell: effective, bound, branch: branch.into(), capacity, estimate, order_slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    #[test]
    fn identical_channels_give_zero() {
        let w = Channel::bsc(0.1).unwrap();
        let s = WiretapScenario::new(w.clone(), w).unwrap();
        let e = wiretap_c(&s, 0.0, 4, 1e-7, 1, 1, None).unwrap();
        assert!(e.value.abs() < 1e-9, "{}", e.value);
    }

    #[test]
    fn cardinality_limits() {
        let w = Channel::bsc(0.1).unwrap();
        assert!(WiretapScenario::with_sizes(w.clone(), w.clone(), 5, 14).is_err());
        assert!(WiretapScenario::with_sizes(w.clone(), w.clone(), 4, 15).is_err());
        let s = WiretapScenario::new(w.clone(), w).unwrap();
        assert_eq!((s.t_size, s.v_size), (4, 14));
    }

    #[test]
    fn large_leakage_approaches_capacity() {
        let main = Channel::bsc(0.05).unwrap();
        let eve = main.then(&Channel::bsc(1.0 / 6.0).unwrap()).unwrap();
        let s = WiretapScenario::with_sizes(main, eve, 2, 4).unwrap();
        let e = wiretap_c(&s, 5.0, 4, 1e-8, 2, 1, None).unwrap();
        let c = 1.0 - binary_entropy(0.05);
        assert!(e.value <= c + 1e-9 && e.value > c - 5e-3, "{}", e.value);
    }

    #[test]
    fn variational_branch() {
        let main = Channel::bsc(0.05).unwrap();
        let eve = Channel::bsc(0.2).unwrap();
        let s = WiretapScenario::with_sizes(main, eve, 1, 2).unwrap();
        let b = wiretap_bounds(&s, Metric::Variational, 0.5, 0.6, Some(100), 2, 1e-6, 1, 1).unwrap();
        assert_eq!(b.branch, "capacity");
        assert!((b.bound - (1.0 - binary_entropy(0.05))).abs() < 1e-8);
    }
}
