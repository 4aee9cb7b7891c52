//! Slice the entropy spectrum of a skewed pmf and of its length-12 iid extension.

use infostab::prob::Pmf;
use infostab::spectrum::{Slicing, SpectrumSource};
use infostab::types::{Caps, JointSource};

fn main() -> infostab::Result<()> {
    let p = Pmf::new(vec![0.5, 0.25, 0.125, 0.0625, 0.0625])?;

    let single = SpectrumSource::from_pmf(&p);
    let slicing = Slicing::build(&single, 1.0, 4)?;
    println!("single letter, lambda = 1, t = 4");
    for sl in slicing.slices() {
        println!("  s={} mass={:.4} log2|S|={:.3} eta={:.4}", sl.s, sl.mass, sl.log2_card, sl.eta);
    }

    let n = 12;
    let src = JointSource::iid(n, &p, &Caps::default())?;
    let ext = SpectrumSource::from_classes(&src.x_marginal(), src.space());
    let slicing = Slicing::build(&ext, 2.0, 12)?;
    println!("n = {n}, lambda = 2, t = 12");
    for c in slicing.cardinality_checks() {
        println!(
            "  s={:2} {:.3} <= log2|S|={:.3} <= {:.3}  holds={}",
            c.s,
            c.lower,
            c.log2_card,
            c.upper,
            c.lower_holds && c.upper_holds
        );
    }
    println!("membership violations: {}", slicing.membership_violations(&ext));
    Ok(())
}
