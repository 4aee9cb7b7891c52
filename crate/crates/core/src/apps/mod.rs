//! Demonstrations on three communication problems: a necessary condition for
//! sending a non-uniform message over a DMC, rate bounds for the wiretap
//! channel, and exponent bounds for keyed authentication.

mod auth;
mod dmc;
mod wiretap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{Channel, Pmf};

pub use auth::{auth_bounds, brute_force_attack, AttackResult, AuthBoundRow, AuthReport, AuthScenario, AuthScenarioFile};
pub use dmc::{counterexample_message, dmc_necessary_condition, DmcReport, DmcScenario, MessageGroup, MessageLaw};
pub use wiretap::{
    wiretap_bounds, wiretap_c, wiretap_sweep, Metric, WiretapBound, WiretapEstimate, WiretapScenario, WiretapSolution,
};

/// Capacity and a maximizing input law.
#[derive(Clone, Debug, Serialize)]
pub struct Capacity {
    pub capacity: f64,
    pub input: Pmf,
    /// `max_x D(W(.|x) || q) - I(p, W)` at the last iterate.
    pub gap: f64,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 1_000_000;

/// Alternating maximization: stops when the upper bound `max_x D(W(.|x)||pW)`
/// and the lower bound `I(p, W)` are within `tol`.
pub fn channel_capacity(w: &Channel, tol: f64) -> Result<Capacity> {
    if !(tol > 0.0) {
        return Err(Error::precondition("tolerance must be positive"));
    }
    let nx = w.inputs();
    let mut p = vec![1.0 / nx as f64; nx];
    for it in 1..=MAX_ITERATIONS {
        let q = w.output(&Pmf::new(p.clone())?);
        let d: Vec<f64> = (0..nx).map(|x| w.row(x).divergence(&q)).collect();
        let lower: f64 = p.iter().zip(&d).map(|(a, b)| a * b).sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower < tol {
            return Ok(Capacity { capacity: lower.max(0.0), input: Pmf::new(p)?, gap: upper - lower, iterations: it });
        }
        let mut next: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a * b.exp2()).collect();
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        p = next;
    }
    Err(Error::Convergence(format!("capacity gap above {tol} after {MAX_ITERATIONS} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    #[test]
    fn noiseless_binary() {
        let c = channel_capacity(&Channel::identity(2).unwrap(), 1e-9).unwrap();
        assert!((c.capacity - 1.0).abs() < 1e-9);
        assert!((c.input.prob(0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn identical_rows() {
        let w = Channel::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(channel_capacity(&w, 1e-9).unwrap().capacity.abs() < 1e-12);
    }

    #[test]
    fn bsc_closed_form() {
        let c = channel_capacity(&Channel::bsc(0.11).unwrap(), 1e-9).unwrap();
        assert!((c.capacity - (1.0 - binary_entropy(0.11))).abs() < 1e-6);
    }

    #[test]
    fn z_channel_closed_form() {
        // Z channel with crossover p: C = log2(1 + (1-p) p^{p/(1-p)}).
        let p: f64 = 0.3;
        let w = Channel::z(p).unwrap();
        let c = channel_capacity(&w, 1e-10).unwrap();
        let expect = (1.0 + (1.0 - p) * p.powf(p / (1.0 - p))).log2();
        assert!((c.capacity - expect).abs() < 1e-7, "{} vs {}", c.capacity, expect);
    }
}
