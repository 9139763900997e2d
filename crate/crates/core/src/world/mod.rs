//! Ground-truth motion and sensor synthesis.
//!
//! A [`Trajectory`] is integrated into a [`TruthTrack`]; the track then feeds
//! the high-rate IMU stream ([`emit_imu`]) and the intermittent velocity and
//! vector measurements ([`emit_events`]).
//!
//! Between grid points the truth attitude is the constant-rate rotation the
//! integrator used for that step and the velocity is the cubic Hermite
//! interpolant of the sampled velocity and acceleration, so measurements taken
//! off the IMU grid stay consistent with the on-grid truth.

mod schedule;
mod sensors;
mod trajectory;

pub use schedule::{SamplingMode, SamplingSchedule};
pub use sensors::{emit_events, emit_imu, MeasurementEvent, NoiseSpec, SensorFrame};
pub use trajectory::{ConstantRate, FigureEight, Trajectory};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::so3::{self, RotationMatrix, Vec3};

pub(crate) const IMU_STREAM: u64 = 1;
pub(crate) const EVENT_STREAM: u64 = 2;
pub(crate) const SCHEDULE_STREAM: u64 = 3;

/// ChaCha8 generator for one independent stream of a seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("invalid sampling bounds: need 0 < t_min ≤ t_max, got t_min = {t_min}, t_max = {t_max}")]
    InvalidBounds { t_min: f64, t_max: f64 },
    #[error("measurement time {t} outside the truth horizon [{start}, {end}]")]
    ScheduleOutOfRange { t: f64, start: f64, end: f64 },
    #[error("invalid step {dt} or horizon {t_end}")]
    InvalidStep { dt: f64, t_end: f64 },
    #[error("noise variance must be non-negative and finite ({name} = {value})")]
    InvalidNoise { name: &'static str, value: f64 },
    #[error("world needs at least one inertial vector and a nonzero gravity vector")]
    DegenerateConstants,
}

/// Known inertial quantities: gravity and the reference directions `r_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConstants {
    /// Gravity in the inertial frame (m/s²).
    pub gravity: Vec3,
    /// Constant inertial vectors observed in the body frame.
    pub inertial_vectors: Vec<Vec3>,
}

impl WorldConstants {
    pub fn new(gravity: Vec3, inertial_vectors: Vec<Vec3>) -> Result<Self, WorldError> {
        let consts = Self { gravity, inertial_vectors };
        consts.validate()?;
        Ok(consts)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if self.inertial_vectors.is_empty() || self.gravity.norm() == 0.0 {
            return Err(WorldError::DegenerateConstants);
        }
        Ok(())
    }

    pub fn n_vectors(&self) -> usize {
        self.inertial_vectors.len()
    }
}

impl Default for WorldConstants {
    /// Earth gravity and a magnetic-field direction.
    fn default() -> Self {
        Self { gravity: Vec3::new(0.0, 0.0, -9.81), inertial_vectors: vec![Vec3::new(0.36, 0.64, 0.0)] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    pub attitude: RotationMatrix,
    /// Inertial velocity (m/s).
    pub velocity: Vec3,
    /// Inertial acceleration `v̇` (m/s²).
    pub acceleration: Vec3,
    /// Body rate applied over `[t, t + dt)`.
    pub step_rate: Vec3,
}

/// Uniformly sampled truth with interpolation between samples.
#[derive(Debug, Clone)]
pub struct TruthTrack {
    pub dt: f64,
    pub samples: Vec<TruthSample>,
}

impl TruthTrack {
    pub fn start(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.t)
    }

    pub fn end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Attitude and velocity at an arbitrary time inside the horizon.
    pub fn at(&self, t: f64) -> Result<(RotationMatrix, Vec3), WorldError> {
        let (start, end) = (self.start(), self.end());
        let slack = 1e-9 * self.dt;
        if self.samples.is_empty() || t < start - slack || t > end + slack {
            return Err(WorldError::ScheduleOutOfRange { t, start, end });
        }
        let last = self.samples.len() - 1;
        let raw = ((t - start) / self.dt).floor();
        let i = (raw.max(0.0) as usize).min(last);
        let a = &self.samples[i];
        let s = t - a.t;
        if i == last || s.abs() <= slack {
            return Ok((a.attitude, a.velocity));
        }
        let b = &self.samples[i + 1];
        let h = b.t - a.t;
        let attitude = a.attitude * so3::exp(&(a.step_rate * s));
        let u = s / h;
        let (u2, u3) = (u * u, u * u * u);
        let velocity = a.velocity * (2.0 * u3 - 3.0 * u2 + 1.0)
            + a.acceleration * (h * (u3 - 2.0 * u2 + u))
            + b.velocity * (-2.0 * u3 + 3.0 * u2)
            + b.acceleration * (h * (u3 - u2));
        Ok((attitude, velocity))
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }
}

/// Integrates the attitude with `R(t + dt) = R(t)·exp(dt·ω(t + dt/2))`; the
/// velocity is taken from the closed form.
pub fn propagate_truth(traj: &dyn Trajectory, t_end: f64, dt: f64) -> Result<TruthTrack, WorldError> {
    if !(dt > 0.0 && dt.is_finite() && t_end >= 0.0 && t_end.is_finite()) {
        return Err(WorldError::InvalidStep { dt, t_end });
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut attitude = traj.initial_attitude();
    for i in 0..=steps {
        let t = i as f64 * dt;
        let step_rate = traj.angular_rate(t + 0.5 * dt);
        samples.push(TruthSample {
            t,
            attitude,
            velocity: traj.velocity(t),
            acceleration: traj.acceleration(t),
            step_rate,
        });
        attitude = attitude * so3::exp(&(step_rate * dt));
    }
    Ok(TruthTrack { dt, samples })
}
