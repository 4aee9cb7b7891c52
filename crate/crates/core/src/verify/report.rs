use serde::Serialize;

use super::{Relation, Status, Verdict};
use crate::stabilizer::{
    CombinedU, FullPartition, MessageClass, MessageClassification, MessageStabilizer, Partition, StableSubset,
};

/// Verdicts and constants for one construction.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StabilityReport {
    pub instance: String,
    /// `types`, `explicit` or `monte-carlo`.
    pub tier: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub in_range: bool,
    pub constants: Vec<(String, f64)>,
    pub verdicts: Vec<Verdict>,
}

impl StabilityReport {
    pub fn new(instance: impl Into<String>, tier: impl Into<String>) -> Self {
        StabilityReport { instance: instance.into(), tier: tier.into(), in_range: true, ..Default::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }

    pub fn count(&self, status: Status) -> usize {
        self.verdicts.iter().filter(|v| v.status == status).count()
    }

    pub fn failures(&self) -> usize {
        self.count(Status::Fail)
    }

    pub fn ok(&self) -> bool {
        self.failures() == 0
    }

    pub fn extend(&mut self, other: StabilityReport) {
        self.in_range &= other.in_range;
        for c in other.constants {
            if !self.constants.iter().any(|(k, _)| *k == c.0) {
                self.constants.push(c);
            }
        }
        self.verdicts.extend(other.verdicts);
    }
}

/// Any stabilizer output that [`run_report`] can check.
pub enum Construction<'a> {
    Empty,
    Subset(&'a StableSubset),
    Partition(&'a Partition),
    Full(&'a FullPartition),
    Message(&'a MessageStabilizer, &'a [MessageClassification]),
    Combined(&'a CombinedU),
}

fn subset_verdicts(s: &StableSubset, out: &mut Vec<Verdict>) {
    let p = &s.params;
    out.push(Verdict::exact("stable subset mass", "p_X(A†) >= (1/n) log2(n/8)", s.mass, Relation::AtLeast, p.mass_floor));
    out.push(Verdict::exact(
        "stable subset deviation",
        "Pr(|h(Y|U) - s* lambda| > n delta + h(u) | U = 1) < 3 2^{-n alpha}",
        s.deviation,
        Relation::Below,
        s.deviation_bound,
    ));
    out.push(Verdict::exact(
        "stable subset pointwise",
        "h(y|u) >= h(y) + log2 p_U(u) at every output",
        s.pointwise_violations as f64,
        Relation::AtMost,
        0.0,
    ));
}

fn partition_verdicts(p: &Partition, out: &mut Vec<Verdict>) {
    let residual = Verdict::exact("partition residual", "p_V(0) < 2^{-((zeta-1)/n) log2(n/8)}", p.v0_mass, Relation::Below, p.v0_bound);
    out.push(if p.v0.is_some() { residual } else { residual.with_note("no residual label") });
    out.push(Verdict::exact("partition size", "|V| <= count bound", p.count() as f64, Relation::AtMost, p.count_bound));
    let floor = (p.n as f64 / 8.0).log2() / p.n as f64;
    for g in &p.groups {
        for c in &g.carves {
            out.push(Verdict::exact(
                format!("carve {} mass", c.label),
                "carved mass >= (1/n) log2(n/8)",
                c.mass,
                Relation::AtLeast,
                floor,
            ));
        }
    }
    for c in &p.checks {
        out.push(Verdict::exact(
            format!("label {} concentration", c.name),
            "Pr(|h(Y|V) - centre| > radius | v) < bound",
            c.deviation,
            Relation::Below,
            c.bound,
        ));
    }
}

fn full_verdicts(f: &FullPartition, out: &mut Vec<Verdict>) {
    out.push(Verdict::exact(
        "joint partition size",
        "log2 |V| <= lk log2(2 n^3 log2|Y|)",
        f.log2_count,
        Relation::AtMost,
        f.log2_count_bound,
    ));
    for g in &f.good {
        out.push(Verdict::exact(
            format!("good set mass (channel {}, message {:?})", g.channel, g.message),
            "p_V(good) >= 1 - 2^{-(n/2) log2(n/8)}",
            g.mass,
            Relation::AtLeast,
            g.bound,
        ));
    }
    for c in &f.checks {
        out.push(Verdict::exact(
            format!("label {} concentration (channel {}, message {:?})", c.label, c.channel, c.message),
            "Pr(|h(Y_i|M_j,U) - H_u| > n delta + 3 h(u) | u) < 4 2^{-n alpha}",
            c.deviation,
            Relation::Below,
            c.bound,
        ));
    }
}

fn message_verdicts(q: &MessageStabilizer, classes: &[MessageClassification], out: &mut Vec<Verdict>) {
    out.push(Verdict::exact("quantizer size", "log2 |Q| <= l log2(psi + 1)", q.log2_count, Relation::AtMost, q.log2_count_bound));
    for c in classes {
        let (mass, formula) = if c.uniform {
            (c.stable_mass, "p_U(stable) >= 1 - 2^{-rho}")
        } else {
            (c.covered_mass, "p_U(stable or saturate) >= 1 - 2^{-rho}")
        };
        out.push(Verdict::exact(format!("message {} coverage", c.component), formula, mass, Relation::AtLeast, 1.0 - c.bound));
        for l in &c.labels {
            let formula = match l.class {
                MessageClass::Saturate => "Pr(h(M_j|U) < psi - (beta + 3 log2|U|) | u) < 2^{-rho}",
                _ => "Pr(|h(M_j|U) - H_u(M_j)| > beta + 3 log2|U| | u) < 2^{-rho}",
            };
            if l.class != MessageClass::Neither {
                out.push(Verdict::exact(
                    format!("message {} label {} deviation", c.component, l.label),
                    formula,
                    l.deviation,
                    Relation::Below,
                    c.bound,
                ));
            }
        }
    }
}

/// Evaluates every inequality the construction carries.
pub fn run_report(construction: &Construction<'_>) -> StabilityReport {
    let mut r = StabilityReport::new("", "types");
    match construction {
        Construction::Empty => {
            r.tier = "none".into();
        }
        Construction::Subset(s) => {
            r.instance = "stable subset".into();
            r.in_range = s.params.in_range;
            r.constants = s.params.table();
            subset_verdicts(s, &mut r.verdicts);
        }
        Construction::Partition(p) => {
            r.instance = "stabilizing partition".into();
            r.in_range = p.in_range;
            r.constants = vec![("n".into(), p.n as f64), ("alpha".into(), p.alpha), ("zeta".into(), p.zeta as f64), ("delta".into(), p.delta)];
            partition_verdicts(p, &mut r.verdicts);
        }
        Construction::Full(f) => {
            r.instance = "joint stabilizing partition".into();
            r.in_range = f.in_range;
            r.constants = vec![("n".into(), f.n as f64), ("alpha".into(), f.alpha), ("delta".into(), f.delta)];
            full_verdicts(f, &mut r.verdicts);
        }
        Construction::Message(q, classes) => {
            r.instance = "message quantizer".into();
            r.constants = vec![("psi".into(), q.psi as f64), ("rho".into(), q.rho), ("beta".into(), q.beta)];
            message_verdicts(q, classes, &mut r.verdicts);
        }
        Construction::Combined(u) => {
            r.instance = "combined conditioning variable".into();
            r.in_range = u.in_range;
            let p = &u.params;
            r.constants = vec![
                ("n".into(), p.n as f64),
                ("eps_n".into(), p.eps_n),
                ("alpha".into(), p.alpha),
                ("rho".into(), p.rho),
                ("beta".into(), u.beta),
                ("delta".into(), u.delta),
                ("nu_n".into(), u.nu),
            ];
            full_verdicts(&u.v, &mut r.verdicts);
            message_verdicts(&u.q, &u.classes, &mut r.verdicts);
            r.verdicts.push(Verdict::exact(
                "good set mass",
                "p_U(good) >= 1 - measured residuals",
                u.good_mass,
                Relation::AtLeast,
                1.0 - u.residual_sum - 1e-12,
            ));
            for c in &u.checks {
                r.verdicts.push(Verdict::exact(
                    format!("label {} domain (channel {}, message {:?}, {:?})", c.label, c.channel, c.message, c.mode),
                    "Pr((Y_w, M) in D(u, w; nu) | u) >= 1 - 8 2^{-n eps_n}",
                    c.probability,
                    Relation::AtLeast,
                    c.target,
                ));
            }
        }
    }
    // Outside the guaranteed range nothing is claimed: failures become indeterminate.
    if !r.in_range {
        for v in &mut r.verdicts {
            if v.status == Status::Fail {
                v.status = Status::Indeterminate;
            }
            v.note.get_or_insert_with(|| "parameters outside the guaranteed range".into());
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_construction_gives_empty_report() {
        let r = run_report(&Construction::Empty);
        assert!(r.is_empty() && r.ok());
    }
}
