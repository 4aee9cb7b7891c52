//! Randomized checks of the lemma oracles.

use infostab::verify::lemma_suite;

fn main() -> infostab::Result<()> {
    for s in lemma_suite(1, 1)? {
        println!(
            "{}: {} instances, {} checks, {} pass, {} vacuous, {} fail, {} indeterminate",
            s.name, s.instances, s.checks, s.passes, s.vacuous, s.violations, s.indeterminate
        );
    }
    Ok(())
}
