//! Stable subset and carved partition for a BSC(0.1) with uniform input.

use infostab::prob::{Channel, Pmf};
use infostab::stabilizer::{build_stable_subset, carve_partition, StableParams};
use infostab::types::{Caps, ChannelModel, JointSource};
use infostab::verify::{run_report, Construction};

fn main() -> infostab::Result<()> {
    let caps = Caps::default();
    let n = 50;
    let alpha = 0.15;
    let w = Channel::bsc(0.1)?;
    let src = JointSource::iid(n, &Pmf::uniform(2), &caps)?;
    let model = ChannelModel::new(src.space(), &w, &caps)?;
    let params = StableParams::new(n, w.outputs(), alpha, false)?;
    for (k, v) in params.table() {
        println!("{k} = {v:.6}");
    }

    let subset = build_stable_subset(&model, &src.x_marginal(), &params)?;
    println!(
        "subset: s*={} mass={:.6} (floor {:.6}) deviation={:.3e} (bound {:.3e})",
        subset.s_star, subset.mass, params.mass_floor, subset.deviation, subset.deviation_bound
    );

    let part = carve_partition(&src, &model, &params, 25)?;
    println!("partition: {} labels, residual mass {:.3e} (bound {:.6})", part.count(), part.v0_mass, part.v0_bound);

    let mut report = run_report(&Construction::Subset(&subset));
    report.extend(run_report(&Construction::Partition(&part)));
    for v in &report.verdicts {
        println!("  {:?} {}: {:.4e} {:?} {:.4e}", v.status, v.name, v.measured, v.relation, v.bound);
    }
    Ok(())
}
