use serde::Serialize;

use super::{Relation, Verdict};
use crate::error::{Error, Result};
use crate::prob::Channel;
use crate::spectrum::min_image_bruteforce;
use crate::types::{Caps, SequenceSpace};

/// Outcome of the entropy-exchange implication and its corollary.
#[derive(Clone, Debug, Serialize)]
pub struct DacoEntropyVerdict {
    /// `Pr(|h(Y|U) - c| > eps)`.
    pub hypothesis_prob: f64,
    pub hypothesis: bool,
    /// `|H(Y|U) - c|` against `eps + mu log2(|Y|/mu^2)`.
    pub conclusion: Verdict,
    /// `Pr(|h(Y|U) - H(Y|U)| > 2 eps + mu log2(|Y|/mu^2))` against `mu`.
    pub corollary: Verdict,
}

impl DacoEntropyVerdict {
    pub fn violated(&self) -> bool {
        self.conclusion.failed() || self.corollary.failed()
    }
}

fn check_joint(joint: &[Vec<f64>]) -> Result<usize> {
    let width = joint.first().map_or(0, |r| r.len());
    if joint.is_empty() || width == 0 || joint.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidDistribution("joint table must be a non-empty rectangle".into()));
    }
    if joint.iter().flatten().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidDistribution("joint entries must be finite and non-negative".into()));
    }
    let total: f64 = joint.iter().flatten().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("joint table sums to {total}")));
    }
    Ok(width)
}

/// `(p(u, y), h(y|u))` over the support of a `[u][y]` joint table.
fn conditional_cells(joint: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let mut cells = Vec::new();
    for row in joint {
        let pu: f64 = row.iter().sum();
        for &p in row {
            if p > 0.0 {
                cells.push((p, pu.log2() - p.log2()));
            }
        }
    }
    cells
}

/// If `Pr(|h(Y|U) - c| > eps) < mu` then `|H(Y|U) - c| < eps + mu log2(|Y|/mu^2)`
/// and `Pr(|h(Y|U) - H(Y|U)| > 2 eps + mu log2(|Y|/mu^2)) < mu`.
///
/// `joint[u][y]`; `|Y|` is the row width.
pub fn check_daco_entropy(joint: &[Vec<f64>], c: f64, eps: f64, mu: f64) -> Result<DacoEntropyVerdict> {
    let ny = check_joint(joint)?;
    if !(mu > 0.0 && mu < 0.5) {
        return Err(Error::precondition(format!("mu must lie in (0, 1/2), got {mu}")));
    }
    if !(eps > 0.0) || !(c >= 0.0) || !c.is_finite() {
        return Err(Error::precondition("need eps > 0 and a finite c >= 0"));
    }
    let cells = conditional_cells(joint);
    let hyp_prob = super::concentration_exact(cells.iter().copied(), c, eps);
    let hypothesis = hyp_prob < mu;
    let slack = mu * (ny as f64 / (mu * mu)).log2();
    let entropy: f64 = cells.iter().map(|(p, h)| p * h).sum();
    let gap = (entropy - c).abs();
    let cor_prob = super::concentration_exact(cells.iter().copied(), entropy, 2.0 * eps + slack);
    let concl_f = "|H(Y|U) - c| < eps + mu log2(|Y|/mu^2)";
    let cor_f = "Pr(|h(Y|U) - H(Y|U)| > 2 eps + mu log2(|Y|/mu^2)) < mu";
    let (conclusion, corollary) = if hypothesis {
        (
            Verdict::exact("entropy exchange", concl_f, gap, Relation::Below, eps + slack),
            Verdict::exact("entropy exchange corollary", cor_f, cor_prob, Relation::Below, mu),
        )
    } else {
        (
            Verdict::vacuous("entropy exchange", concl_f, gap, Relation::Below, eps + slack),
            Verdict::vacuous("entropy exchange corollary", cor_f, cor_prob, Relation::Below, mu),
        )
    };
    Ok(DacoEntropyVerdict { hypothesis_prob: hyp_prob, hypothesis, conclusion, corollary })
}

/// `Pr(|h(V|U) - h(V)| > alpha) < (|U| + 1) 2^{-alpha}` for every `alpha`.
///
/// `joint[u][v]`; `|U|` counts the rows.
pub fn check_only_lemma(joint: &[Vec<f64>], alphas: &[f64]) -> Result<Vec<Verdict>> {
    let nv = check_joint(joint)?;
    let pv: Vec<f64> = (0..nv).map(|v| joint.iter().map(|r| r[v]).sum()).collect();
    let mut cells = Vec::new();
    for row in joint {
        let pu: f64 = row.iter().sum();
        for (v, &p) in row.iter().enumerate() {
            if p > 0.0 {
                cells.push((p, (pu.log2() - p.log2()) - (-pv[v].log2())));
            }
        }
    }
    let nu = joint.len() as f64;
    alphas
        .iter()
        .map(|&a| {
            if !(a >= 0.0) {
                return Err(Error::precondition(format!("alpha must be non-negative, got {a}")));
            }
            let measured = super::concentration_exact(cells.iter().copied(), 0.0, a);
            Ok(Verdict::exact(
                format!("conditioning drift at alpha={a}"),
                "Pr(|h(V|U) - h(V)| > alpha) < (|U|+1) 2^{-alpha}",
                measured,
                Relation::Below,
                (nu + 1.0) * (-a).exp2(),
            ))
        })
        .collect()
}

/// Explicit output sequences of length `n`, capped.
fn output_space(ny: usize, n: usize, caps: &Caps) -> Result<SequenceSpace> {
    SequenceSpace::all_sequences(n, ny, caps)
}

fn check_conditional(cond: &[(Vec<u32>, f64)], nx: usize, n: usize) -> Result<()> {
    if cond.is_empty() {
        return Err(Error::precondition("every conditional input law needs at least one sequence"));
    }
    for (x, p) in cond {
        if x.len() != n || x.iter().any(|&v| v as usize >= nx) {
            return Err(Error::precondition("input sequence has the wrong length or letter"));
        }
        if !(*p > 0.0) {
            return Err(Error::InvalidDistribution("conditional weights must be positive".into()));
        }
    }
    let total: f64 = cond.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("conditional input law sums to {total}")));
    }
    Ok(())
}

/// `log2 w_n(y|u)` for every explicit output sequence.
fn induced_log(cond: &[(Vec<u32>, f64)], w: &Channel, ys: &SequenceSpace) -> Vec<f64> {
    let xs: Vec<Vec<usize>> = cond.iter().map(|(x, _)| x.iter().map(|&v| v as usize).collect()).collect();
    ys.classes()
        .iter()
        .map(|c| {
            let y: Vec<usize> = c.label.iter().map(|&v| v as usize).collect();
            let p: f64 = cond.iter().zip(&xs).map(|((_, px), x)| px * w.n_fold_log_prob(x, &y).exp2()).sum();
            p.log2()
        })
        .collect()
}

/// `log2(w_n(y|u) / w~_n(y|u)) <= n max log2(w/w~) + 2|X||Y| log2 n` for
/// every `u` and every `y` with `w~_n(y|u) > 0`.
///
/// `conditionals[u]` lists `(x-sequence, p(x|u))`. The supremum of the
/// directed divergence over `(ŵ, p̂)` is the largest entrywise log-ratio.
pub fn check_olalt(w: &Channel, w_tilde: &Channel, n: usize, conditionals: &[Vec<(Vec<u32>, f64)>], caps: &Caps) -> Result<Verdict> {
    if w.inputs() != w_tilde.inputs() || w.outputs() != w_tilde.outputs() {
        return Err(Error::precondition("channels must share alphabets"));
    }
    if n < 2 {
        return Err(Error::precondition("need n >= 2"));
    }
    for c in conditionals {
        check_conditional(c, w.inputs(), n)?;
    }
    let ys = output_space(w.outputs(), n, caps)?;
    let sup = w.max_log_ratio(w_tilde);
    let bound = n as f64 * sup + 2.0 * (w.inputs() * w.outputs()) as f64 * (n as f64).log2();
    let mut worst = f64::NEG_INFINITY;
    for cond in conditionals {
        let a = induced_log(cond, w, &ys);
        let b = induced_log(cond, w_tilde, &ys);
        for (la, lb) in a.iter().zip(&b) {
            if *lb > f64::NEG_INFINITY {
                worst = worst.max(la - lb);
            }
        }
    }
    let formula = "log2(w_n(y|u)/w~_n(y|u)) <= n sup D_ŵ(w||w~|p̂) + 2|X||Y| log2 n";
    let name = "channel substitution";
    if bound == f64::INFINITY {
        return Ok(Verdict::vacuous(name, formula, worst, Relation::AtMost, bound).with_note("w~ has a zero where w does not"));
    }
    Ok(Verdict::exact(name, formula, worst, Relation::AtMost, bound + 1e-9 * bound.abs().max(1.0)))
}

/// If `log2 g(A_u, 1 - beta) <= c` then
/// `Pr(h(Y|U) <= mu + c | u) >= 1 - 2^{-mu} - beta`, for each `mu`.
///
/// `cond` is the input law `p(x|u)`; its support is `A_u`.
pub fn check_dacosupport(
    w: &Channel,
    n: usize,
    cond: &[(Vec<u32>, f64)],
    c: f64,
    beta: f64,
    mus: &[f64],
    caps: &Caps,
) -> Result<Vec<Verdict>> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::precondition(format!("beta must lie in (0, 1), got {beta}")));
    }
    if !(c >= 0.0) {
        return Err(Error::precondition("c must be non-negative"));
    }
    check_conditional(cond, w.inputs(), n)?;
    let support: Vec<Vec<u32>> = cond.iter().map(|(x, _)| x.clone()).collect();
    let image = min_image_bruteforce(&support, w, n, 1.0 - beta, caps)?;
    let log_g = (image.card as f64).log2();
    let hypothesis = log_g <= c;
    let ys = output_space(w.outputs(), n, caps)?;
    let log_py = induced_log(cond, w, &ys);
    let formula = "log2 g(A_u, 1-beta) <= c  =>  Pr(h(Y|U) <= mu + c | u) >= 1 - 2^{-mu} - beta";
    mus.iter()
        .map(|&mu| {
            if !(mu >= 0.0) {
                return Err(Error::precondition(format!("mu must be non-negative, got {mu}")));
            }
            let measured: f64 = log_py.iter().filter(|l| **l > f64::NEG_INFINITY && -**l <= mu + c).map(|l| l.exp2()).sum();
            let bound = 1.0 - (-mu).exp2() - beta;
            let name = format!("support concentration at mu={mu}");
            let v = if hypothesis {
                Verdict::exact(name, formula, measured, Relation::AtLeast, bound - 1e-12)
            } else {
                Verdict::vacuous(name, formula, measured, Relation::AtLeast, bound)
            };
            Ok(v.with_note(format!("log2 g = {log_g}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::Status;

    #[test]
    fn constant_u_uniform_y() {
        let joint = vec![vec![0.25; 4]];
        let v = check_daco_entropy(&joint, 2.0, 0.1, 0.25).unwrap();
        assert!(v.hypothesis && v.hypothesis_prob == 0.0);
        assert_eq!(v.conclusion.status, Status::Pass);
        assert_eq!(v.corollary.status, Status::Pass);
    }

    #[test]
    fn mu_at_half_is_rejected() {
        assert!(check_daco_entropy(&[vec![0.5, 0.5]], 1.0, 0.1, 0.5).is_err());
    }

    #[test]
    fn failed_hypothesis_is_vacuous() {
        let v = check_daco_entropy(&[vec![0.5, 0.5]], 5.0, 0.1, 0.25).unwrap();
        assert_eq!(v.conclusion.status, Status::VacuousPass);
    }

    #[test]
    fn single_u_and_independence_give_zero() {
        let one = check_only_lemma(&[vec![0.2, 0.3, 0.5]], &[0.5]).unwrap();
        assert_eq!(one[0].measured, 0.0);
        let ind = vec![vec![0.1, 0.3], vec![0.15, 0.45]];
        let v = check_only_lemma(&ind, &[0.5, 1.0]).unwrap();
        assert!(v.iter().all(|v| v.measured < 1e-12));
    }

    #[test]
    fn identical_channels_give_zero_ratio() {
        let w = Channel::bsc(0.2).unwrap();
        let cond = vec![vec![(vec![0, 1, 1, 0], 0.5), (vec![1, 1, 1, 0], 0.5)]];
        let v = check_olalt(&w, &w, 4, &cond, &Caps::default()).unwrap();
        assert!(v.measured.abs() < 1e-12);
        assert_eq!(v.status, Status::Pass);
    }

    #[test]
    fn single_sequence_reduces_to_product_ratio() {
        let w = Channel::bsc(0.1).unwrap();
        let wt = Channel::bsc(0.3).unwrap();
        let cond = vec![vec![(vec![0, 0, 0], 1.0)]];
        let v = check_olalt(&w, &wt, 3, &cond, &Caps::default()).unwrap();
        // Worst output agrees with the input everywhere: 3 log2(0.9/0.7).
        assert!((v.measured - 3.0 * (0.9f64 / 0.7).log2()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_support_has_probability_one() {
        let w = Channel::identity(2).unwrap();
        let cond = vec![(vec![0, 1, 0], 0.5), (vec![1, 1, 0], 0.5)];
        let v = check_dacosupport(&w, 3, &cond, 1.0, 0.1, &[0.5, 2.0], &Caps::default()).unwrap();
        assert!(v.iter().all(|v| v.status == Status::Pass && (v.measured - 1.0).abs() < 1e-12));
    }
}
