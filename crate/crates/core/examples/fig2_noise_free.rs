//! Noise-free figure-eight run: continuous observer with zero-order hold
//! against the hybrid observer, both started from a 178.2° attitude error.
//!
//! ```bash
//! cargo run --release --example fig2_noise_free -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use hybrid_attitude::runner::{cmd_simulate, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ScenarioConfig::from_toml(include_str!("../configs/noise_free.toml"))?;
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("out/fig2_noise_free"), PathBuf::from);
    let (manifest, sim) = cmd_simulate(&config, &out)?;

    println!("{:<15} {:>12} {:>12} {:>10}", "observer", "mean |R̃|_I", "max |R̃|_I", "settled");
    for run in &sim.runs {
        let c = &run.report.convergence;
        let settled = c.time_to_threshold.map_or_else(|| "never".into(), |t| format!("{t:.2} s"));
        println!(
            "{:<15} {:>12.3e} {:>12.3e} {:>10}",
            run.report.observer, c.steady_state_error, c.steady_state_max, settled
        );
    }
    println!("artifacts in {} ({:.2} s)", out.display(), manifest.wall_clock_s);
    Ok(())
}
