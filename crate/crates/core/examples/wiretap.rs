//! c(ell) for a degraded binary wiretap channel and the resulting rate bounds.

use infostab::apps::{wiretap_bounds, wiretap_sweep, Metric, WiretapScenario};
use infostab::prob::Channel;

fn main() -> infostab::Result<()> {
    let s = WiretapScenario::new(Channel::bsc(0.05)?, Channel::bsc(0.2)?)?;
    let ells = [0.0, 0.05, 0.1, 0.2, 0.3];
    for e in wiretap_sweep(&s, &ells, 16, 1e-9, 1, 1)? {
        println!("c({:.2}) >= {:.6}", e.ell, e.value);
    }
    for metric in [Metric::WeakLeakage, Metric::Variational] {
        let b = wiretap_bounds(&s, metric, 0.1, 0.1, Some(1000), 16, 1e-9, 1, 1)?;
        println!("{metric:?}: rate bound {:.6} via {}", b.bound, b.branch);
    }
    Ok(())
}
