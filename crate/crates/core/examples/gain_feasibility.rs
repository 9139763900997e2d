//! Feasibility report for the reference gains, for an unstable vector gain
//! and for an unobservable vector configuration.
//!
//! ```bash
//! cargo run --release --example gain_feasibility
//! ```

use hybrid_attitude::runner::{gains_check, ObserverKind, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = ScenarioConfig::from_toml(include_str!("../configs/noise_free.toml"))?;
    println!("== reference gains ==\n{}", gains_check(&reference)?.to_text());

    let mut unstable = reference.clone();
    unstable.gains.get_mut(&ObserverKind::Hybrid).unwrap().k_r = 2.0;
    println!("== k_r = 2 ==\n{}", gains_check(&unstable)?.to_text());

    let mut collinear = reference;
    collinear.world.inertial_vectors = vec![[0.0, 0.0, 1.0]];
    println!("== vector parallel to gravity ==\n{}", gains_check(&collinear)?.to_text());
    Ok(())
}
