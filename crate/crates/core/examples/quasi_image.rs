//! Minimum eta-quasi-images and the slice-union certificate.

use infostab::prob::Pmf;
use infostab::spectrum::{min_quasi_image, verify_slice_union, Slicing, SpectrumSource};

fn main() -> infostab::Result<()> {
    let p = Pmf::from_weights(&[8.0, 4.0, 4.0, 2.0, 1.0, 1.0])?;
    let src = SpectrumSource::from_pmf(&p);
    let atoms = src.atoms().expect("exact source");

    for eta in [0.5, 0.8, 0.95] {
        let q = min_quasi_image(atoms, eta)?;
        println!("eta={eta}: size {:.3} (whole atoms {:?}, partial {:?}), mass {:.4}", q.card(), q.whole, q.partial, q.mass);
    }

    let slicing = Slicing::build(&src, 1.0, 4)?;
    for s in 0..=slicing.t() {
        let c = verify_slice_union(atoms, &slicing, s)?;
        println!(
            "slices 0..={s}: eta_s={:.4} minimum={} uniqueness={:?} bounds {:.3}..{:.3}",
            c.eta_s, c.is_minimum, c.uniqueness, c.lower, c.upper
        );
    }
    Ok(())
}
