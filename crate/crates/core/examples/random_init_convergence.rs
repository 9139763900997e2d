//! Continuous and reduced observers with a measurement at every IMU sample,
//! started from uniformly drawn attitudes away from the undesired equilibria.
//!
//! ```bash
//! cargo run --release --example random_init_convergence -- [RUNS]
//! ```

use hybrid_attitude::analysis::{convergence_report, metric_series, random_rotation_away_from};
use hybrid_attitude::gains::{enumerate_equilibria, QMatrices};
use hybrid_attitude::observer::{run_continuous, ContinuousVariant, EstimatorState, MeasurementFeed};
use hybrid_attitude::runner::{ObserverKind, ScenarioConfig};
use hybrid_attitude::world::{emit_events, emit_imu, propagate_truth, stream_rng, NoiseSpec};
use rayon::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let runs: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let config = ScenarioConfig { duration: 30.0, ..ScenarioConfig::default() };
    let consts = config.world.constants();
    let traj = config.trajectory.build();
    let truth = propagate_truth(traj.as_ref(), config.duration, 1.0 / config.imu_rate)?;
    let frames = emit_imu(&truth, traj.as_ref(), &consts, &NoiseSpec::noise_free())?;
    let times: Vec<f64> = frames.iter().map(|f| f.t).collect();
    let dense = emit_events(&truth, &consts, &times, &NoiseSpec::noise_free())?;
    let gains = &config.gains[&ObserverKind::Continuous];
    let q = QMatrices::from_gains(gains, &consts)?;
    let equilibria = enumerate_equilibria(&q);

    let worst: Vec<(f64, f64, f64)> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let r0 = random_rotation_away_from(&mut stream_rng(11, i), &equilibria, 1e-3);
            let init = EstimatorState::new(r0, consts.n_vectors());
            let tail = |variant| {
                let trace =
                    run_continuous(&init, &frames, MeasurementFeed::Continuous(&dense), gains, &consts, variant)
                        .unwrap();
                let series = metric_series(&trace, &truth, &consts, &q, None, None).unwrap();
                convergence_report(&series, 1e-6, 0.25).unwrap().steady_state_max
            };
            (r0.distance_to_identity(), tail(ContinuousVariant::Full), tail(ContinuousVariant::Reduced))
        })
        .collect();
    for (i, (d0, full, reduced)) in worst.iter().enumerate() {
        println!("run {i:>3}: initial |R̃|_I {d0:.4}, final-window max: continuous {full:.2e}, reduced {reduced:.2e}");
    }
    let max_full = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let max_reduced = worst.iter().map(|w| w.2).fold(0.0, f64::max);
    println!("worst: continuous {max_full:.2e}, reduced {max_reduced:.2e}");
    Ok(())
}
