use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Channel;

/// `2^{log2_count}` equiprobable message values carrying total mass `mass`.
///
/// Counts are kept as real exponents so laws over astronomically many
/// values stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageGroup {
    pub mass: f64,
    pub log2_count: f64,
}

impl MessageGroup {
    /// `h(m)` of each member.
    pub fn surprisal(&self) -> f64 {
        self.log2_count - self.mass.log2()
    }
}

/// A message law as a list of equiprobable groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageLaw {
    pub groups: Vec<MessageGroup>,
}

impl MessageLaw {
    /// One group per entry of an explicit pmf; zero entries are dropped.
    pub fn explicit(p: &[f64]) -> Result<Self> {
        if p.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidDistribution("message probabilities must be non-negative".into()));
        }
        let law = MessageLaw {
            groups: p.iter().filter(|v| **v > 0.0).map(|&mass| MessageGroup { mass, log2_count: 0.0 }).collect(),
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::InvalidDistribution("message law has no groups".into()));
        }
        if self.groups.iter().any(|g| !(g.mass > 0.0 && g.mass <= 1.0) || !(g.log2_count >= 0.0) || !g.log2_count.is_finite()) {
            return Err(Error::InvalidDistribution("group masses must lie in (0, 1] and counts be >= 1".into()));
        }
        let total = self.total();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("message law sums to {total}")));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.groups.iter().map(|g| g.mass).sum()
    }

    /// `H(M)`.
    pub fn entropy(&self) -> f64 {
        self.groups.iter().map(|g| g.mass * g.surprisal()).sum()
    }

    /// `Pr(h(M) > t)`.
    pub fn tail(&self, t: f64) -> f64 {
        self.groups.iter().filter(|g| g.surprisal() > t).map(|g| g.mass).sum()
    }
}

/// Mass `3/4` at one message, the rest uniform over `2^{2nC}` others.
pub fn counterexample_message(n: usize, capacity: f64) -> MessageLaw {
    let k = 2.0 * n as f64 * capacity;
    MessageLaw {
        groups: vec![
            MessageGroup { mass: 0.75, log2_count: 0.0 },
            MessageGroup { mass: 0.25, log2_count: k },
        ],
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DmcScenario {
    pub channel: Channel,
    pub message: MessageLaw,
    pub n: usize,
    pub capacity: f64,
    pub zeta: f64,
    /// Error probability the code is asked to meet.
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DmcReport {
    pub n: usize,
    pub capacity: f64,
    pub zeta: f64,
    pub delta: f64,
    /// `Pr(h(M)/n > C + zeta)`.
    pub lhs: f64,
    /// `delta + 2^{-n zeta}`.
    pub rhs: f64,
    /// `lhs < rhs`: the condition can be met at this `delta`.
    pub condition_holds: bool,
    /// `lhs - 2^{-n zeta}`: the error probability the condition forces.
    pub forced_error: f64,
    pub entropy: f64,
    pub entropy_rate: f64,
    /// `H(M)/n <= C`: the entropy condition is silent.
    pub entropy_condition_holds: bool,
}

/// `Pr(h(M)/n > C + zeta) < delta + 2^{-n zeta}`.
pub fn dmc_necessary_condition(s: &DmcScenario) -> Result<DmcReport> {
    s.message.validate()?;
    if s.n == 0 || !(s.zeta > 0.0) || !(s.delta >= 0.0 && s.delta < 1.0) {
        return Err(Error::precondition("need n >= 1, zeta > 0 and delta in [0, 1)"));
    }
    let nf = s.n as f64;
    let lhs = s.message.tail(nf * (s.capacity + s.zeta));
    let floor = (-nf * s.zeta).exp2();
    let rhs = s.delta + floor;
    let entropy = s.message.entropy();
    Ok(DmcReport {
        n: s.n,
        capacity: s.capacity,
        zeta: s.zeta,
        delta: s.delta,
        lhs,
        rhs,
        condition_holds: lhs < rhs,
        forced_error: (lhs - floor).max(0.0),
        entropy,
        entropy_rate: entropy / nf,
        entropy_condition_holds: entropy / nf <= s.capacity,
    })
}
