//! Capacity of a few standard channels.

use infostab::apps::channel_capacity;
use infostab::prob::Channel;

fn main() -> infostab::Result<()> {
    for (name, w) in [("BSC(0.1)", Channel::bsc(0.1)?), ("Z(0.3)", Channel::z(0.3)?), ("identity(3)", Channel::identity(3)?)] {
        let c = channel_capacity(&w, 1e-12)?;
        println!("{name}: C = {:.6} bits in {} iterations, input {:?}", c.capacity, c.iterations, c.input.probs());
    }
    Ok(())
}
