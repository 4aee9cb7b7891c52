//! Quantized-surprisal labels for a uniform message over 1024 values.

use infostab::stabilizer::{build_q, message_only_source};
use infostab::verify::{run_report, Construction};

fn main() -> infostab::Result<()> {
    let size = 1usize << 10;
    let src = message_only_source(vec![size], (0..size as u32).map(|m| (vec![m], 1.0 / size as f64)).collect())?;
    let q = build_q(&src, 2500, 5.0)?;
    println!("psi={} rho={} beta={:.4} log2|labels|={:.3}", q.psi, q.rho, q.beta, q.log2_count);
    let classes = vec![q.classify(&src, &q.labeling, 0)?];
    for v in run_report(&Construction::Message(&q, &classes)).verdicts {
        println!("  {:?} {}: {:.4e} {:?} {:.4e}", v.status, v.name, v.measured, v.relation, v.bound);
    }
    Ok(())
}
