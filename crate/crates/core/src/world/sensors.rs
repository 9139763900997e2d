use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{stream_rng, Trajectory, TruthTrack, WorldConstants, WorldError, EVENT_STREAM, IMU_STREAM};
use crate::so3::Vec3;

/// Additive white Gaussian noise, one independent draw per axis per sample.
///
/// Fields are variances; the per-axis standard deviation is their square root.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Gyroscope variance ((rad/s)²).
    #[serde(default)]
    pub gyro_var: f64,
    /// Variance applied to every body-frame vector measurement `b_i`.
    #[serde(default)]
    pub mag_var: f64,
    /// Accelerometer variance ((m/s²)²).
    #[serde(default)]
    pub accel_var: f64,
    /// Body-frame velocity sensor variance ((m/s)²).
    #[serde(default)]
    pub dvl_var: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noise_free() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        for (name, value) in [
            ("gyro_var", self.gyro_var),
            ("mag_var", self.mag_var),
            ("accel_var", self.accel_var),
            ("dvl_var", self.dvl_var),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(WorldError::InvalidNoise { name, value });
            }
        }
        Ok(())
    }
}

fn gaussian3(rng: &mut ChaCha8Rng, var: f64) -> Vec3 {
    let sd = var.sqrt();
    let mut draw = || -> f64 { rng.sample::<f64, _>(StandardNormal) * sd };
    Vec3::new(draw(), draw(), draw())
}

/// High-rate inertial sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    pub t: f64,
    /// Body angular rate (rad/s).
    pub omega: Vec3,
    /// Specific force in the body frame (m/s²).
    pub accel: Vec3,
}

/// Low-rate measurement: body-frame velocity and body-frame inertial vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEvent {
    pub t: f64,
    /// `Rᵀ v` (m/s).
    pub velocity: Vec3,
    /// `Rᵀ r_i` for each inertial vector.
    pub vectors: Vec<Vec3>,
}

/// One IMU frame per truth sample: `ω = ω(t) + n_g`, `a = Rᵀ(v̇ − g) + n_a`.
pub fn emit_imu(
    truth: &TruthTrack,
    traj: &dyn Trajectory,
    consts: &WorldConstants,
    noise: &NoiseSpec,
) -> Result<Vec<SensorFrame>, WorldError> {
    noise.validate()?;
    let mut rng = stream_rng(noise.seed, IMU_STREAM);
    Ok(truth
        .samples
        .iter()
        .map(|s| {
            let omega = traj.angular_rate(s.t) + gaussian3(&mut rng, noise.gyro_var);
            let accel = s.attitude.matrix().transpose() * (s.acceleration - consts.gravity)
                + gaussian3(&mut rng, noise.accel_var);
            SensorFrame { t: s.t, omega, accel }
        })
        .collect())
}

/// Measurements at the given arrival times, interpolating the truth off-grid.
pub fn emit_events(
    truth: &TruthTrack,
    consts: &WorldConstants,
    schedule: &[f64],
    noise: &NoiseSpec,
) -> Result<Vec<MeasurementEvent>, WorldError> {
    noise.validate()?;
    let mut rng = stream_rng(noise.seed, EVENT_STREAM);
    schedule
        .iter()
        .map(|&t| {
            let (attitude, velocity) = truth.at(t)?;
            let rt = attitude.matrix().transpose();
            let velocity = rt * velocity + gaussian3(&mut rng, noise.dvl_var);
            let vectors = consts.inertial_vectors.iter().map(|r| rt * r + gaussian3(&mut rng, noise.mag_var)).collect();
            Ok(MeasurementEvent { t, velocity, vectors })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{propagate_truth, ConstantRate, FigureEight, SamplingSchedule};

    #[test]
    fn hover_reads_minus_gravity() {
        let traj = ConstantRate::hover();
        let consts = WorldConstants::default();
        let truth = propagate_truth(&traj, 1.0, 0.01).unwrap();
        let frames = emit_imu(&truth, &traj, &consts, &NoiseSpec::noise_free()).unwrap();
        for f in &frames {
            assert_eq!(f.accel, Vec3::new(0.0, 0.0, 9.81));
            assert_eq!(f.omega, Vec3::zeros());
        }
    }

    #[test]
    fn figure_eight_accel_matches_closed_form() {
        let traj = FigureEight::default();
        let consts = WorldConstants::default();
        let truth = propagate_truth(&traj, 5.0, 0.0025).unwrap();
        let frames = emit_imu(&truth, &traj, &consts, &NoiseSpec::noise_free()).unwrap();
        for (f, s) in frames.iter().zip(&truth.samples) {
            let reconstructed = s.attitude * f.accel + consts.gravity;
            assert!((reconstructed - traj.acceleration(s.t)).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_world_measures_inertial_quantities() {
        let traj = ConstantRate { v0: Vec3::new(1.0, -2.0, 0.5), ..ConstantRate::hover() };
        let consts = WorldConstants::default();
        let truth = propagate_truth(&traj, 1.0, 0.01).unwrap();
        let times = [0.1, 0.255, 0.9];
        let events = emit_events(&truth, &consts, &times, &NoiseSpec::noise_free()).unwrap();
        for e in &events {
            assert!((e.velocity - traj.v0).norm() < 1e-14);
            assert!((e.vectors[0] - consts.inertial_vectors[0]).norm() < 1e-14);
        }
    }

    #[test]
    fn vector_norms_preserved() {
        let traj = FigureEight::default();
        let consts = WorldConstants::default();
        let truth = propagate_truth(&traj, 10.0, 0.0025).unwrap();
        let times = SamplingSchedule::jittered(0.09, 0.11, 3).generate(10.0).unwrap();
        let events = emit_events(&truth, &consts, &times, &NoiseSpec::noise_free()).unwrap();
        let r = consts.inertial_vectors[0].norm();
        for e in &events {
            assert!((e.vectors[0].norm() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let traj = FigureEight::default();
        let consts = WorldConstants::default();
        let truth = propagate_truth(&traj, 2.0, 0.0025).unwrap();
        let noise = NoiseSpec { gyro_var: 0.01, mag_var: 0.01, accel_var: 0.1, dvl_var: 0.1, seed: 9 };
        let a = emit_imu(&truth, &traj, &consts, &noise).unwrap();
        let b = emit_imu(&truth, &traj, &consts, &noise).unwrap();
        assert_eq!(a, b);
        let times = SamplingSchedule::jittered(0.09, 0.11, 3).generate(2.0).unwrap();
        let e1 = emit_events(&truth, &consts, &times, &noise).unwrap();
        let e2 = emit_events(&truth, &consts, &times, &noise).unwrap();
        assert_eq!(e1, e2);
        let other = emit_imu(&truth, &traj, &consts, &NoiseSpec { seed: 10, ..noise }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn out_of_range_event() {
        let truth = propagate_truth(&FigureEight::default(), 1.0, 0.01).unwrap();
        let err = emit_events(&truth, &WorldConstants::default(), &[1.5], &NoiseSpec::noise_free());
        assert!(matches!(err, Err(WorldError::ScheduleOutOfRange { .. })));
    }

    #[test]
    fn negative_variance_rejected() {
        let noise = NoiseSpec { gyro_var: -1.0, ..NoiseSpec::default() };
        assert!(noise.validate().is_err());
    }
}
