//! Exponent bounds and the exact optimal attack for a small keyed code.

use infostab::apps::{auth_bounds, AuthScenarioFile};
use infostab::prob::Channel;
use infostab::types::Caps;

fn main() -> infostab::Result<()> {
    let file = AuthScenarioFile::parse(r#"{"n": 3, "encoder": [[[0,0,0],[1,1,0]],[[0,1,1],[1,0,1]]], "threshold": 1.0}"#)?;
    let s = file.into_scenario(Channel::bsc(0.05)?, Channel::bsc(0.3)?)?;
    let r = auth_bounds(&s, &Caps::default())?;
    println!("attack success {:.4} (beta = {:.4})", r.success, r.beta);
    println!("bound2 = {:?}, Simmons = {:?}, Maurer = {:?}", r.bound2, r.simmons, r.maurer);
    for st in &r.attack.strategies {
        println!("  {}: {:.4}", st.name, st.success);
    }
    println!("all bounds hold: {}", r.ok());
    Ok(())
}
