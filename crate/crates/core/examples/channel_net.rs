//! A finite net over 2x2 channels and nearest-point gaps on random channels.

use infostab::prob::Channel;
use infostab::stabilizer::{build_net, net_gap, net_threshold_n};
use infostab::types::Caps;
use infostab::verify::stream_rng;

fn main() -> infostab::Result<()> {
    let eps = 0.2;
    let net = build_net(eps, 2, 2, &Caps::default())?;
    println!("|net| = {} <= {:.3e}, valid from n = {}", net.cardinality, net.cardinality_bound, net_threshold_n(eps, 2, 2));
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let w = Channel::random(&mut stream_rng(7, i), 2, 2, 1.0);
        worst = worst.max(net_gap(&w, &net.nearest(&w)?));
    }
    println!("max gap over 1000 channels: {worst:.4} bits (limit {:.4})", eps / 2.0);
    Ok(())
}
