//! The message-spectrum necessary condition against the entropy condition.

use infostab::apps::{channel_capacity, counterexample_message, dmc_necessary_condition, DmcScenario};
use infostab::prob::Channel;

fn main() -> infostab::Result<()> {
    let w = Channel::bsc(0.1)?;
    let capacity = channel_capacity(&w, 1e-12)?.capacity;
    for n in [16, 64, 256] {
        let s = DmcScenario { channel: w.clone(), message: counterexample_message(n, capacity), n, capacity, zeta: 0.02, delta: 0.0 };
        let r = dmc_necessary_condition(&s)?;
        println!(
            "n={n}: H(M)/n={:.4} vs C={:.4}; Pr(h(M)/n > C+zeta)={:.3} forced error {:.3}",
            r.entropy_rate, capacity, r.lhs, r.forced_error
        );
    }
    Ok(())
}
