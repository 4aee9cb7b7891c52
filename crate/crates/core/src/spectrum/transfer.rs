use serde::Serialize;

use super::image::min_image_bruteforce;
use super::quasi::min_quasi_image;
use super::tau::tau_bound;
use super::SpectrumSource;
use crate::error::{Error, Result};
use crate::prob::Channel;
use crate::types::{Caps, ChannelModel, JointSource};

/// Outcome of passing from a minimum quasi-image of `X` to an image of the
/// inputs `A' = {x : w^n(B|x) >= eps}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferReport {
    pub log2_quasi_card: f64,
    /// Indices into the input list.
    pub a_prime: Vec<usize>,
    pub mass_a_prime: f64,
    /// `(alpha - eps) / (1 - eps)`.
    pub mass_bound: f64,
    pub mass_holds: bool,
    pub log2_image_card: Option<f64>,
    /// `log2 |B| + n tau_n(eps, beta)`.
    pub image_bound: f64,
    pub image_holds: Option<bool>,
}

/// `xs` lists input sequences with their probabilities.
pub fn quasi_to_image_transfer(
    xs: &[(Vec<u32>, f64)],
    w: &Channel,
    n: usize,
    alpha: f64,
    eps: f64,
    beta: f64,
    caps: &Caps,
) -> Result<TransferReport> {
    if !(0.0 < eps && eps < alpha && alpha < 1.0 && 0.0 < beta && beta < 1.0) {
        return Err(Error::precondition(format!("need 0 < eps < alpha < 1 and beta in (0,1); got eps={eps}, alpha={alpha}, beta={beta}")));
    }
    let source = JointSource::explicit(n, w.inputs(), vec![], xs.iter().map(|(x, p)| (vec![], x.clone(), *p)).collect())?;
    let model = ChannelModel::new(source.space(), w, caps)?;
    let py = model.output_log(&source.x_marginal());
    let spectrum = SpectrumSource::from_classes(&py, model.y());
    let q = min_quasi_image(spectrum.atoms().expect("exact"), alpha)?;
    let mut in_b = vec![false; model.y().len()];
    for &i in &q.whole {
        in_b[i] = true;
    }
    let px = source.x_marginal();
    let mut a_prime = Vec::new();
    let mut mass = 0.0;
    let mut kept = Vec::new();
    for (i, (x, _)) in xs.iter().enumerate() {
        let c = source.space().class_of(x).expect("registered");
        if px[c] > f64::NEG_INFINITY && model.event_prob(c, &in_b) >= eps {
            if !kept.contains(&c) {
                mass += px[c].exp2();
                kept.push(c);
            }
            a_prime.push(i);
        }
    }
    let mass_bound = (alpha - eps) / (1.0 - eps);
    let tau = if beta <= 1.0 - eps { tau_bound(n, eps, beta, w.outputs())?.value } else { 0.0 };
    let image_bound = q.log2_card + n as f64 * tau;
    let set: Vec<Vec<u32>> = kept.iter().map(|&c| source.space().class(c).label.clone()).collect();
    let log2_image_card = match min_image_bruteforce(&set, w, n, 1.0 - beta, caps) {
        Ok(r) => Some((r.card as f64).log2()),
        Err(Error::ResourceCap { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(TransferReport {
        log2_quasi_card: q.log2_card,
        a_prime,
        mass_a_prime: mass,
        mass_bound,
        mass_holds: mass >= mass_bound - 1e-12,
        log2_image_card,
        image_bound,
        image_holds: log2_image_card.map(|g| g <= image_bound + 1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_instances_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let w = Channel::random(&mut rng, 2, 2, 1.0);
            let k = rng.gen_range(1..=6);
            let xs: Vec<(Vec<u32>, f64)> = (0..k).map(|_| ((0..n).map(|_| rng.gen_range(0..2)).collect(), 1.0 / k as f64)).collect();
            let alpha = rng.gen_range(0.3..0.95);
            let eps = alpha * rng.gen_range(0.1..0.9);
            let beta = rng.gen_range(0.01..0.99);
            let r = quasi_to_image_transfer(&xs, &w, n, alpha, eps, beta, &Caps::default()).unwrap();
            assert!(r.mass_holds, "{r:?}");
            assert_ne!(r.image_holds, Some(false), "{r:?}");
        }
    }
}
