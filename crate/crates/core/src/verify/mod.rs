//! Executable implication checks and concentration measurement.
//!
//! Every check returns a [`Verdict`] carrying the formula it was tested
//! against. Exact checks never touch a random number generator; Monte Carlo
//! checks draw from streams derived from a master seed with [`derive_seed`]
//! and report a two-sided 99% Clopper-Pearson interval.

mod oracles;
mod report;
mod suite;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::prob::{Channel, Pmf};
use crate::types::ChannelModel;

pub use oracles::{check_daco_entropy, check_dacosupport, check_olalt, check_only_lemma, DacoEntropyVerdict};
pub use report::{run_report, Construction, StabilityReport};
pub use suite::{
    construction_suite, daco_entropy_suite, dacosupport_suite, lemma_suite, olalt_suite, only_lemma_suite, SuiteResult,
};

/// Confidence level of every Monte Carlo interval.
pub const MC_CONFIDENCE: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    /// The hypothesis of an implication failed; nothing was asserted.
    VacuousPass,
    Fail,
    /// A Monte Carlo interval straddles the bound, or a cap was hit.
    Indeterminate,
}

/// How `measured` is compared with `bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Below,
    AtMost,
    AtLeast,
}

impl Relation {
    fn holds(self, measured: f64, bound: f64) -> bool {
        match self {
            Relation::Below => measured < bound,
            Relation::AtMost => measured <= bound,
            Relation::AtLeast => measured >= bound,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub formula: String,
    pub measured: f64,
    pub relation: Relation,
    pub bound: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    /// An exactly evaluated inequality.
    pub fn exact(name: impl Into<String>, formula: impl Into<String>, measured: f64, relation: Relation, bound: f64) -> Self {
        let status = if relation.holds(measured, bound) { Status::Pass } else { Status::Fail };
        Verdict {
            name: name.into(),
            formula: formula.into(),
            measured,
            relation,
            bound,
            status,
            interval: None,
            samples: None,
            note: None,
        }
    }

    /// An implication whose hypothesis failed.
    pub fn vacuous(name: impl Into<String>, formula: impl Into<String>, measured: f64, relation: Relation, bound: f64) -> Self {
        Verdict { status: Status::VacuousPass, ..Verdict::exact(name, formula, measured, relation, bound) }
    }

    /// A sampled probability: fails only when the whole interval is on the wrong side.
    pub fn sampled(name: impl Into<String>, formula: impl Into<String>, est: &McEstimate, relation: Relation, bound: f64) -> Self {
        let status = if relation.holds(est.interval.hi, bound) && relation.holds(est.interval.lo, bound) {
            Status::Pass
        } else if !relation.holds(est.interval.lo, bound) && !relation.holds(est.interval.hi, bound) {
            Status::Fail
        } else {
            Status::Indeterminate
        };
        Verdict {
            name: name.into(),
            formula: formula.into(),
            measured: est.estimate,
            relation,
            bound,
            status,
            interval: Some(est.interval),
            samples: Some(est.samples),
            note: None,
        }
    }

    /// A check that could not run, e.g. because a resource cap was hit.
    pub fn indeterminate(name: impl Into<String>, formula: impl Into<String>, note: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            formula: formula.into(),
            measured: f64::NAN,
            relation: Relation::AtMost,
            bound: f64::NAN,
            status: Status::Indeterminate,
            interval: None,
            samples: None,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

/// `Pr(|h - c| > r)` over `(probability, h)` cells.
pub fn concentration_exact<I: IntoIterator<Item = (f64, f64)>>(cells: I, c: f64, r: f64) -> f64 {
    cells.into_iter().filter(|&(p, h)| p > 0.0 && (h - c).abs() > r).map(|(p, _)| p).sum()
}

/// `Pr(|h(Y) - c| > r)` for the output of `model` under the input law
/// `x_log2`, summed over output classes.
pub fn concentration_probability(model: &ChannelModel, x_log2: &[f64], c: f64, r: f64) -> Result<f64> {
    if x_log2.len() != model.x_len() {
        return Err(Error::precondition("input law does not match the channel model"));
    }
    if !(r >= 0.0) {
        return Err(Error::precondition(format!("radius must be non-negative, got {r}")));
    }
    let y = model.y();
    let y_log2 = model.output_log(x_log2);
    Ok(concentration_exact(
        y_log2.iter().enumerate().filter(|(_, l)| **l > f64::NEG_INFINITY).map(|(yc, &l)| (l.exp2(), y.log2_size(yc) - l)),
        c,
        r,
    ))
}

/// A Monte Carlo frequency with its Clopper-Pearson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub hits: u64,
    pub samples: u64,
    pub estimate: f64,
    pub interval: Interval,
    pub seed: u64,
}

/// Two-sided Clopper-Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 <= k <= n, n > 0");
    let a = (1.0 - confidence) / 2.0;
    let lo = if k == 0 { 0.0 } else { beta_quantile(k as f64, (n - k + 1) as f64, a) };
    let hi = if k == n { 1.0 } else { beta_quantile((k + 1) as f64, (n - k) as f64, 1.0 - a) };
    (lo, hi)
}

fn beta_quantile(a: f64, b: f64, q: f64) -> f64 {
    let d = Beta::new(a, b).expect("positive shape parameters");
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if d.cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `stream` under master seed `master`:
/// `splitmix64(master ^ splitmix64(stream))`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// A ChaCha8 generator seeded by [`derive_seed`].
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}

/// Fixed number of Monte Carlo streams, so results do not depend on the thread count.
pub const MC_STREAMS: u64 = 64;

/// Maps `f` over `items` on up to `threads` scoped threads, preserving order.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(usize, &T) -> R + Sync) -> Vec<R> {
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .enumerate()
            .map(|(ci, part)| s.spawn(move || part.iter().enumerate().map(|(i, t)| f(ci * chunk + i, t)).collect::<Vec<R>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Seeded Monte Carlo estimate of `Pr(|h(Y) - c| > r)` for `Y = W^n(X)`, `X`
/// iid `p`. Each of [`MC_STREAMS`] streams draws its share of samples.
pub fn concentration_mc_iid(
    p: &Pmf,
    w: &Channel,
    n: usize,
    c: f64,
    r: f64,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<McEstimate> {
    if p.len() != w.inputs() {
        return Err(Error::precondition("input pmf does not match the channel"));
    }
    if samples == 0 || n == 0 {
        return Err(Error::precondition("need at least one sample of positive length"));
    }
    let q = w.output(p);
    let log_q: Vec<f64> = q.probs().iter().map(|v| v.log2()).collect();
    let streams: Vec<u64> = (0..MC_STREAMS).collect();
    let counts = par_map(&streams, threads, |_, &s| {
        let share = samples / MC_STREAMS + u64::from(s < samples % MC_STREAMS);
        let mut rng = stream_rng(seed, s);
        let mut hits = 0u64;
        for _ in 0..share {
            let mut h = 0.0;
            for _ in 0..n {
                let x = p.sample(&mut rng);
                let y = w.row(x).sample(&mut rng);
                h -= log_q[y];
            }
            if (h - c).abs() > r {
                hits += 1;
            }
        }
        hits
    });
    let hits: u64 = counts.iter().sum();
    let (lo, hi) = clopper_pearson(hits, samples, MC_CONFIDENCE);
    Ok(McEstimate {
        hits,
        samples,
        estimate: hits as f64 / samples as f64,
        interval: Interval { lo, hi, confidence: MC_CONFIDENCE },
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Caps, JointSource};

    #[test]
    fn wide_radius_gives_zero() {
        let cells = [(0.5, 1.0), (0.25, 2.0), (0.25, 2.0)];
        assert_eq!(concentration_exact(cells, 1.5, 0.5), 0.0);
        assert_eq!(concentration_exact([(1.0, 3.0)], 3.0, 0.0), 0.0);
    }

    #[test]
    fn bsc_output_matches_binomial_sum() {
        let n = 50;
        let p = Pmf::new(vec![0.7, 0.3]).unwrap();
        let w = Channel::bsc(0.1).unwrap();
        let caps = Caps::default();
        let src = JointSource::iid(n, &p, &caps).unwrap();
        let model = ChannelModel::new(src.space(), &w, &caps).unwrap();
        let q = w.output(&p);
        let hy = n as f64 * q.entropy();
        let got = concentration_probability(&model, &src.x_marginal(), hy, n as f64 * 0.05).unwrap();
        // Y is iid q: sum the binomial over the number of ones.
        let mut expect = 0.0;
        let (a, b) = (q.prob(0), q.prob(1));
        for k in 0..=n {
            let h = -((n - k) as f64 * a.log2() + k as f64 * b.log2());
            if (h - hy).abs() > n as f64 * 0.05 {
                let lc = crate::prob::logspace::LogFactorials::new(n).multinomial(&[(n - k) as u32, k as u32]);
                expect += (lc + h * -1.0).exp2();
            }
        }
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        assert!(got > 0.0);
    }

    #[test]
    fn clopper_pearson_brackets() {
        let (lo, hi) = clopper_pearson(0, 100, 0.99);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.005f64.powf(0.01))).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(50, 100, 0.99);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-9);
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn mc_is_thread_independent() {
        let p = Pmf::new(vec![0.7, 0.3]).unwrap();
        let w = Channel::bsc(0.1).unwrap();
        let a = concentration_mc_iid(&p, &w, 40, 35.0, 2.0, 5000, 9, 1).unwrap();
        let b = concentration_mc_iid(&p, &w, 40, 35.0, 2.0, 5000, 9, 4).unwrap();
        assert_eq!(a, b);
    }
}
