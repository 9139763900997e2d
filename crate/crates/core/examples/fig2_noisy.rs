//! Noisy figure-eight run repeated over several seeds, comparing the
//! steady-state attitude error of the two observers.
//!
//! ```bash
//! cargo run --release --example fig2_noisy
//! ```

use hybrid_attitude::runner::{simulate, ObserverKind, ScenarioConfig};

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = ScenarioConfig::from_toml(include_str!("../configs/noisy.toml"))?;
    let (mut hybrid, mut zoh) = (Vec::new(), Vec::new());
    for seed in 1..=5 {
        let sim = simulate(&ScenarioConfig { seed, ..base.clone() })?;
        let h = sim.run(ObserverKind::Hybrid).unwrap().report.convergence.steady_state_error;
        let z = sim.run(ObserverKind::ContinuousZoh).unwrap().report.convergence.steady_state_error;
        println!("seed {seed}: hybrid {h:.3e}, continuous_zoh {z:.3e}");
        hybrid.push(h);
        zoh.push(z);
    }
    let (h, z) = (median(hybrid), median(zoh));
    println!("median: hybrid {h:.3e}, continuous_zoh {z:.3e}, ratio zoh/hybrid {:.2}", z / h);

    // One noise source at a time, seed 1.
    let sources = [("gyro", 0), ("magnetometer", 1), ("accelerometer", 2), ("velocity", 3)];
    for (name, which) in sources {
        let mut c = base.clone();
        let full = c.noise;
        c.noise = Default::default();
        match which {
            0 => c.noise.gyro_var = full.gyro_var,
            1 => c.noise.mag_var = full.mag_var,
            2 => c.noise.accel_var = full.accel_var,
            _ => c.noise.dvl_var = full.dvl_var,
        }
        let sim = simulate(&c)?;
        let h = sim.run(ObserverKind::Hybrid).unwrap().report.convergence.steady_state_error;
        let z = sim.run(ObserverKind::ContinuousZoh).unwrap().report.convergence.steady_state_error;
        println!("{name:<14} only: hybrid {h:.3e}, continuous_zoh {z:.3e}");
    }
    Ok(())
}
