use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::report::{run_report, Construction, StabilityReport};
use super::{check_daco_entropy, check_dacosupport, check_olalt, check_only_lemma, par_map, stream_rng, Status, Verdict};
use crate::error::Result;
use crate::prob::{Channel, Pmf};
use crate::stabilizer::{build_q, build_stable_subset, carve_partition, message_only_source, StableParams};
use crate::types::{Caps, ChannelModel, JointSource};

/// Tally of one randomized property suite.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub seed: u64,
    pub instances: usize,
    pub checks: usize,
    pub passes: usize,
    pub vacuous: usize,
    pub violations: usize,
    pub indeterminate: usize,
    /// The first few failing verdicts, for diagnosis.
    pub examples: Vec<Verdict>,
}

impl SuiteResult {
    fn new(name: &str, seed: u64, instances: usize) -> Self {
        SuiteResult { name: name.into(), seed, instances, ..Default::default() }
    }

    fn add(&mut self, v: Verdict) {
        self.checks += 1;
        match v.status {
            Status::Pass => self.passes += 1,
            Status::VacuousPass => self.vacuous += 1,
            Status::Indeterminate => self.indeterminate += 1,
            Status::Fail => {
                self.violations += 1;
                if self.examples.len() < 5 {
                    self.examples.push(v);
                }
            }
        }
    }

    pub fn ok(&self) -> bool {
        self.violations == 0
    }
}

// Distinct stream ranges per suite so suites never share randomness.
const DACO_STREAM: u64 = 1 << 32;
const ONLY_STREAM: u64 = 2 << 32;
const OLALT_STREAM: u64 = 3 << 32;
const SUPPORT_STREAM: u64 = 4 << 32;

fn random_joint(rng: &mut ChaCha8Rng, nu: usize, ny: usize) -> Vec<Vec<f64>> {
    let conc = *[0.1, 0.5, 1.0, 5.0, 50.0].choose(rng).expect("non-empty");
    let sparse = rng.gen_bool(0.3);
    let mut w: Vec<Vec<f64>> = (0..nu).map(|_| Pmf::random(rng, ny, conc).probs().to_vec()).collect();
    if sparse {
        for row in &mut w {
            for v in row.iter_mut() {
                if rng.gen_bool(0.3) {
                    *v = 0.0;
                }
            }
        }
    }
    let pu = Pmf::random(rng, nu, 1.0);
    let mut joint: Vec<Vec<f64>> = w
        .iter()
        .zip(pu.probs())
        .map(|(row, p)| {
            let s: f64 = row.iter().sum();
            if s == 0.0 {
                vec![0.0; ny]
            } else {
                row.iter().map(|v| p * v / s).collect()
            }
        })
        .collect();
    let total: f64 = joint.iter().flatten().sum();
    if total == 0.0 {
        joint[0][0] = 1.0;
    } else {
        joint.iter_mut().flatten().for_each(|v| *v /= total);
    }
    joint
}

/// Entropy exchange over random `(Y, U)` with `|Y|, |U| <= 16` and a grid of `(c, eps, mu)`.
pub fn daco_entropy_suite(seed: u64, instances: usize, threads: usize) -> Result<SuiteResult> {
    let idx: Vec<usize> = (0..instances).collect();
    let results = par_map(&idx, threads, |i, _| -> Result<Vec<Verdict>> {
        let mut rng = stream_rng(seed, DACO_STREAM + i as u64);
        let ny = rng.gen_range(2..=16);
        let nu = rng.gen_range(1..=16);
        let joint = random_joint(&mut rng, nu, ny);
        let entropy: f64 = joint
            .iter()
            .flat_map(|row| {
                let pu: f64 = row.iter().sum();
                row.iter().filter(|p| **p > 0.0).map(move |p| p * (pu / p).log2())
            })
            .sum();
        let mut out = Vec::new();
        let cs = [entropy, entropy + 0.3, (entropy - 0.3).max(0.0), rng.gen_range(0.0..(ny as f64).log2() * 1.5)];
        for &c in &cs {
            for eps in [0.05, 0.25, 1.0, 2.0] {
                for mu in [0.01, 0.1, 0.25, 0.49] {
                    let v = check_daco_entropy(&joint, c, eps, mu)?;
                    out.push(v.conclusion);
                    out.push(v.corollary);
                }
            }
        }
        Ok(out)
    });
    let mut s = SuiteResult::new("entropy exchange", seed, instances);
    for r in results {
        r?.into_iter().for_each(|v| s.add(v));
    }
    Ok(s)
}

/// Conditioning drift over random `(U, V)` with `|U|, |V| <= 16`, `alpha in {0.5, 1, ..., 8}`.
pub fn only_lemma_suite(seed: u64, instances: usize, threads: usize) -> Result<SuiteResult> {
    let alphas: Vec<f64> = (1..=16).map(|k| k as f64 * 0.5).collect();
    let idx: Vec<usize> = (0..instances).collect();
    let results = par_map(&idx, threads, |i, _| {
        let mut rng = stream_rng(seed, ONLY_STREAM + i as u64);
        let nu = rng.gen_range(1..=16);
        let nv = rng.gen_range(1..=16);
        check_only_lemma(&random_joint(&mut rng, nu, nv), &alphas)
    });
    let mut s = SuiteResult::new("conditioning drift", seed, instances);
    for r in results {
        r?.into_iter().for_each(|v| s.add(v));
    }
    Ok(s)
}

fn random_sequences(rng: &mut ChaCha8Rng, n: usize, nx: usize, count: usize) -> Vec<(Vec<u32>, f64)> {
    let total = (nx as u64).pow(n as u32);
    let mut picked: Vec<u64> = Vec::new();
    while picked.len() < count.min(total as usize) {
        let v = rng.gen_range(0..total);
        if !picked.contains(&v) {
            picked.push(v);
        }
    }
    let weights = Pmf::random(rng, picked.len(), 1.0);
    picked
        .iter()
        .zip(weights.probs())
        .map(|(&v, &p)| {
            let mut seq = vec![0u32; n];
            let mut r = v;
            for slot in seq.iter_mut().rev() {
                *slot = (r % nx as u64) as u32;
                r /= nx as u64;
            }
            (seq, p)
        })
        .collect()
}

/// Channel substitution over random binary instances with `n <= 8`.
pub fn olalt_suite(seed: u64, instances: usize, threads: usize) -> Result<SuiteResult> {
    let idx: Vec<usize> = (0..instances).collect();
    let results = par_map(&idx, threads, |i, _| {
        let mut rng = stream_rng(seed, OLALT_STREAM + i as u64);
        let n = rng.gen_range(2..=8);
        let w = Channel::random(&mut rng, 2, 2, 1.0);
        let wt = if rng.gen_bool(0.1) { w.clone() } else { Channel::random(&mut rng, 2, 2, 1.0) };
        let nu = rng.gen_range(1..=3);
        let conds: Vec<_> = (0..nu)
            .map(|_| {
                let k = rng.gen_range(1..=4);
                random_sequences(&mut rng, n, 2, k)
            })
            .collect();
        check_olalt(&w, &wt, n, &conds, &Caps::default())
    });
    let mut s = SuiteResult::new("channel substitution", seed, instances);
    for r in results {
        s.add(r?);
    }
    Ok(s)
}

/// Support concentration over random binary instances with `n <= 6`.
pub fn dacosupport_suite(seed: u64, instances: usize, threads: usize) -> Result<SuiteResult> {
    let idx: Vec<usize> = (0..instances).collect();
    let caps = Caps::default();
    let mus = [0.25, 1.0, 2.0, 4.0];
    let results = par_map(&idx, threads, |i, _| -> Result<Vec<Verdict>> {
        let mut rng = stream_rng(seed, SUPPORT_STREAM + i as u64);
        let n = rng.gen_range(3..=6);
        let w = Channel::random(&mut rng, 2, 2, 1.0);
        let k = rng.gen_range(1..=4);
        let cond = random_sequences(&mut rng, n, 2, k);
        let mut out = Vec::new();
        for beta in [0.05, 0.2, 0.5] {
            // Tight c, slack c, and c below log2 g (vacuous).
            let g = crate::spectrum::min_image_bruteforce(
                &cond.iter().map(|(x, _)| x.clone()).collect::<Vec<_>>(),
                &w,
                n,
                1.0 - beta,
                &caps,
            )?;
            let log_g = (g.card as f64).log2();
            out.extend(check_dacosupport(&w, n, &cond, log_g, beta, &mus, &caps)?);
            out.extend(check_dacosupport(&w, n, &cond, log_g + 0.5, beta, &mus, &caps)?);
            if log_g > 0.5 {
                out.extend(check_dacosupport(&w, n, &cond, log_g - 0.5, beta, &mus, &caps)?);
            }
        }
        Ok(out)
    });
    let mut s = SuiteResult::new("support concentration", seed, instances);
    for r in results {
        r?.into_iter().for_each(|v| s.add(v));
    }
    Ok(s)
}

/// The four lemma suites at their acceptance sizes.
pub fn lemma_suite(seed: u64, threads: usize) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        daco_entropy_suite(seed, 1000, threads)?,
        only_lemma_suite(seed, 1000, threads)?,
        olalt_suite(seed, 200, threads)?,
        dacosupport_suite(seed, 100, threads)?,
    ])
}

/// The desk-scale constructions: the stable subset and the carved partition
/// for BSC(0.1) with uniform input at `n = 50`, and the quantizer for a
/// uniform message over `2^10` values.
pub fn construction_suite() -> Result<StabilityReport> {
    let caps = Caps::default();
    let n = 50;
    let w = Channel::bsc(0.1)?;
    let src = JointSource::iid(n, &Pmf::uniform(2), &caps)?;
    let model = ChannelModel::new(src.space(), &w, &caps)?;
    let params = StableParams::new(n, 2, 0.15, false)?;
    let subset = build_stable_subset(&model, &src.x_marginal(), &params)?;
    let mut report = run_report(&Construction::Subset(&subset));
    report.instance = "BSC(0.1), uniform input, n=50, alpha=0.15".into();
    let part = carve_partition(&src, &model, &params, 25)?;
    report.extend(run_report(&Construction::Partition(&part)));
    let size = 1usize << 10;
    let msrc = message_only_source(vec![size], (0..size as u32).map(|m| (vec![m], 1.0 / size as f64)).collect())?;
    let q = build_q(&msrc, 2500, 5.0)?;
    let classes = vec![q.classify(&msrc, &q.labeling, 0)?];
    report.extend(run_report(&Construction::Message(&q, &classes)));
    Ok(report)
}
