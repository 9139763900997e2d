//! Ultimate bounds of the attitude error under bounded inputs of growing
//! amplitude.
//!
//! ```bash
//! cargo run --release --example iss_study -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use hybrid_attitude::runner::{cmd_iss_study, iss_verdict, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ScenarioConfig::from_toml(include_str!("../configs/iss.toml"))?;
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("out/iss_study"), PathBuf::from);
    let (_, result) = cmd_iss_study(&config, &out)?;
    println!("c_Γ = {:.4}, λ_min(Q̄) = {:.4}", result.c_gamma, result.lambda_min);
    for (a, b) in result.amplitudes.iter().zip(&result.ultimate_bounds) {
        println!("amplitude {a:<6} ultimate bound {b:.3e}");
    }
    println!("derivative bound: {} violations in {} checks", result.violations, result.checks);
    let problems = iss_verdict(&result);
    println!("{}", if problems.is_empty() { "all checks hold".to_string() } else { problems.join("\n") });
    Ok(())
}
