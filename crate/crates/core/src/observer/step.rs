//! One integration step of each observer.
//!
//! A step covers one [`ImuSegment`]. Over the step the body rate is constant
//! and the specific force varies linearly when expressed in the body frame
//! frozen at the segment start. The innovation `σ_R` is frozen at its value at
//! the start of the step; with `Φ(s) = exp(s k_o σ_R^×)` and `E(s) = exp(s ω^×)`
//! the attitude update `R̂⁺ = Φ(h) R̂ E(h)` is then exact, and the linear
//! states are integrated in the frame co-rotating with `Φ`, where the only
//! remaining dynamics are the constant-coefficient `(v̂, ĝ)` coupling and the
//! measurement forcing. The hybrid flow reduces to a closed form; the
//! continuous observers use classical RK4 on that co-rotating system.

use super::{innovation_continuous, innovation_hybrid, EstimatorState, GainSet, ObserverError, Timer, TIMER_TOL};
use crate::so3::{self, RotationMatrix, Vec3};
use crate::world::{MeasurementEvent, SensorFrame, WorldConstants};

/// IMU input over `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSegment {
    pub t0: f64,
    pub t1: f64,
    /// Body rate held over the segment.
    pub omega: Vec3,
    /// Specific force at `t0`, body frame at `t0`.
    pub force_start: Vec3,
    /// Specific force at `t1`, expressed in the body frame at `t0`.
    pub force_end: Vec3,
}

impl ImuSegment {
    /// Segment between two consecutive frames: mean rate, specific force
    /// interpolated linearly in the frame frozen at `a.t`.
    pub fn between(a: &SensorFrame, b: &SensorFrame) -> Self {
        let h = b.t - a.t;
        let omega = (a.omega + b.omega) * 0.5;
        Self { t0: a.t, t1: b.t, omega, force_start: a.accel, force_end: so3::exp(&(omega * h)) * b.accel }
    }

    /// Holds one frame for `dt` seconds (body-frame specific force constant).
    pub fn hold(frame: &SensorFrame, dt: f64) -> Self {
        Self {
            t0: frame.t,
            t1: frame.t + dt,
            omega: frame.omega,
            force_start: frame.accel,
            force_end: so3::exp(&(frame.omega * dt)) * frame.accel,
        }
    }

    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }

    fn fraction(&self, s: f64) -> f64 {
        let h = self.duration();
        if h > 0.0 {
            s / h
        } else {
            0.0
        }
    }

    /// Body rotation accumulated after `s` seconds.
    fn body_rotation(&self, s: f64) -> RotationMatrix {
        so3::exp(&(self.omega * s))
    }

    /// Specific force at offset `s`, in the frame frozen at `t0`.
    fn force(&self, s: f64) -> Vec3 {
        self.force_start.lerp(&self.force_end, self.fraction(s))
    }

    /// Sub-segment `[t_start, t_end]`, re-expressed in the body frame at `t_start`.
    pub fn slice(&self, t_start: f64, t_end: f64) -> Self {
        let (s0, s1) = (t_start - self.t0, t_end - self.t0);
        let back = self.body_rotation(s0).transpose();
        Self {
            t0: t_start,
            t1: t_end,
            omega: self.omega,
            force_start: back * self.force(s0),
            force_end: back * self.force(s1),
        }
    }
}

/// Velocity and vector measurements available to a continuous observer over one step.
#[derive(Debug, Clone, PartialEq)]
pub enum Aiding {
    /// Nothing received yet.
    Unavailable,
    /// Body-frame values held constant.
    Held { velocity: Vec3, vectors: Vec<Vec3> },
    /// Values at both ends of the segment, expressed in the body frame at the
    /// segment start and interpolated linearly there.
    Interpolated { velocity: [Vec3; 2], vectors: Vec<[Vec3; 2]> },
}

impl Aiding {
    pub fn held(event: &MeasurementEvent) -> Self {
        Aiding::Held { velocity: event.velocity, vectors: event.vectors.clone() }
    }

    /// Interpolates between measurements taken at the ends of `segment`.
    pub fn between(a: &MeasurementEvent, b: &MeasurementEvent, segment: &ImuSegment) -> Self {
        let to_start = segment.body_rotation(segment.duration());
        Aiding::Interpolated {
            velocity: [a.velocity, to_start * b.velocity],
            vectors: a.vectors.iter().zip(&b.vectors).map(|(x, y)| [*x, &to_start * y]).collect(),
        }
    }

    /// Restriction to the sub-segment `[t_start, t_end]` of `segment`.
    pub fn slice(&self, segment: &ImuSegment, t_start: f64, t_end: f64) -> Self {
        match self {
            Aiding::Interpolated { velocity, vectors } => {
                let (s0, s1) = (t_start - segment.t0, t_end - segment.t0);
                let back = segment.body_rotation(s0).transpose();
                let (u0, u1) = (segment.fraction(s0), segment.fraction(s1));
                let cut = |pair: &[Vec3; 2]| [back * pair[0].lerp(&pair[1], u0), back * pair[0].lerp(&pair[1], u1)];
                Aiding::Interpolated { velocity: cut(velocity), vectors: vectors.iter().map(cut).collect() }
            }
            other => other.clone(),
        }
    }

    /// Body-frame velocity and vectors at the segment start.
    fn at_start(&self) -> Option<(Vec3, Vec<Vec3>)> {
        match self {
            Aiding::Unavailable => None,
            Aiding::Held { velocity, vectors } => Some((*velocity, vectors.clone())),
            Aiding::Interpolated { velocity, vectors } => Some((velocity[0], vectors.iter().map(|p| p[0]).collect())),
        }
    }

    /// Velocity measurement at offset `s`, in the body frame frozen at the segment start.
    fn velocity_in_start_frame(&self, segment: &ImuSegment, s: f64) -> Option<Vec3> {
        match self {
            Aiding::Unavailable => None,
            Aiding::Held { velocity, .. } => Some(&segment.body_rotation(s) * velocity),
            Aiding::Interpolated { velocity, .. } => Some(velocity[0].lerp(&velocity[1], segment.fraction(s))),
        }
    }
}

/// Classical RK4 for the co-rotating `(v̂, ĝ)` system of the continuous observers.
fn rk4_linear<F>(h: f64, v: Vec3, g: Vec3, deriv: F) -> (Vec3, Vec3)
where
    F: Fn(f64, &Vec3, &Vec3) -> (Vec3, Vec3),
{
    let (k1v, k1g) = deriv(0.0, &v, &g);
    let (k2v, k2g) = deriv(0.5 * h, &(v + k1v * (0.5 * h)), &(g + k1g * (0.5 * h)));
    let (k3v, k3g) = deriv(0.5 * h, &(v + k2v * (0.5 * h)), &(g + k2g * (0.5 * h)));
    let (k4v, k4g) = deriv(h, &(v + k3v * h), &(g + k3g * h));
    (v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0), g + (k1g + k2g * 2.0 + k3g * 2.0 + k4g) * (h / 6.0))
}

fn rotate_attitude(state: &EstimatorState, phi: &RotationMatrix, segment: &ImuSegment) -> RotationMatrix {
    let body = segment.body_rotation(segment.duration());
    let m = phi.matrix() * state.attitude.matrix() * body.matrix();
    // Re-projection only removes round-off; the three factors are exact rotations.
    RotationMatrix::from_matrix_unchecked(m)
}

/// One step of the continuous observer over `segment`.
pub fn flow_continuous(
    state: &EstimatorState,
    segment: &ImuSegment,
    aiding: &Aiding,
    gains: &GainSet,
    consts: &WorldConstants,
) -> EstimatorState {
    let h = segment.duration();
    let start = aiding.at_start();
    let b: &[Vec3] = start.as_ref().map_or(&[], |(_, v)| v.as_slice());
    let sigma = innovation_continuous(state, b, consts, gains);
    let phi = so3::exp(&(sigma * (gains.k_o * h)));
    let r0 = *state.attitude.matrix();
    let available = start.is_some();
    let (k_v, k_g) = if available { (gains.k_v, gains.k_g) } else { (0.0, 0.0) };

    let (zv, zg) = rk4_linear(h, state.velocity, state.gravity, |s, v, g| {
        let f = r0 * segment.force(s);
        let m = aiding.velocity_in_start_frame(segment, s).map_or(Vec3::zeros(), |m| r0 * m);
        let dv = -v * k_v + g + f + m * k_v;
        let dg = -v * k_g + m * k_g;
        (dv, dg)
    });

    EstimatorState {
        attitude: rotate_attitude(state, &phi, segment),
        velocity: phi * zv,
        gravity: phi * zg,
        vectors: state.vectors.clone(),
    }
}

/// One step of the reduced observer; `ĝ = k_v(R̂ v_m − v̂)` is not a state.
///
/// The returned `gravity` field holds that expression evaluated at the end of
/// the step (zero while no velocity measurement is available).
pub fn flow_reduced(
    state: &EstimatorState,
    segment: &ImuSegment,
    aiding: &Aiding,
    gains: &GainSet,
    consts: &WorldConstants,
) -> EstimatorState {
    let h = segment.duration();
    let start = aiding.at_start();
    let mut with_gravity = state.clone();
    with_gravity.gravity = match &start {
        Some((v_m, _)) => (state.attitude.matrix() * v_m - state.velocity) * gains.k_v,
        None => Vec3::zeros(),
    };
    let b: &[Vec3] = start.as_ref().map_or(&[], |(_, v)| v.as_slice());
    let sigma = innovation_continuous(&with_gravity, b, consts, gains);
    let phi = so3::exp(&(sigma * (gains.k_o * h)));
    let r0 = *state.attitude.matrix();
    let k_v = if start.is_some() { gains.k_v } else { 0.0 };

    let (zv, _) = rk4_linear(h, state.velocity, Vec3::zeros(), |s, v, _| {
        let f = r0 * segment.force(s);
        let m = aiding.velocity_in_start_frame(segment, s).map_or(Vec3::zeros(), |m| r0 * m);
        (-v * k_v + f + m * k_v, Vec3::zeros())
    });

    let attitude = rotate_attitude(state, &phi, segment);
    let velocity = phi * zv;
    let gravity = match aiding.velocity_in_start_frame(segment, h) {
        Some(m) => (phi.matrix() * r0 * m - velocity) * gains.k_v,
        None => Vec3::zeros(),
    };
    EstimatorState { attitude, velocity, gravity, vectors: state.vectors.clone() }
}

/// Flow of the hybrid observer over `segment`; the timer decreases by the
/// segment length and saturates at zero.
pub fn flow_hybrid(
    state: &EstimatorState,
    timer: Timer,
    segment: &ImuSegment,
    gains: &GainSet,
    consts: &WorldConstants,
) -> (EstimatorState, Timer) {
    let h = segment.duration();
    let sigma = innovation_hybrid(state, consts, gains);
    let phi = so3::exp(&(sigma * (gains.k_o * h)));
    let r0 = state.attitude.matrix();
    // Specific force is linear in the co-rotating frame, so the trapezoid is exact.
    let mean_force = r0 * (segment.force_start + segment.force_end) * 0.5;
    let z_velocity = state.velocity + (state.gravity + mean_force) * h;
    let next = EstimatorState {
        attitude: rotate_attitude(state, &phi, segment),
        velocity: phi * z_velocity,
        gravity: phi * state.gravity,
        vectors: state.vectors.iter().map(|r| &phi * r).collect(),
    };
    (next, Timer { tau: (timer.tau - h).max(0.0) })
}

/// Measurement update of the hybrid observer. The attitude is left untouched.
pub fn jump_hybrid(
    state: &EstimatorState,
    timer: Timer,
    event: &MeasurementEvent,
    gains: &GainSet,
    next_gap: f64,
) -> Result<(EstimatorState, Timer), ObserverError> {
    if timer.tau > TIMER_TOL {
        return Err(ObserverError::TimerNotExpired { tau: timer.tau });
    }
    if event.vectors.len() != state.vectors.len() {
        return Err(ObserverError::DimensionMismatch { expected: state.vectors.len(), got: event.vectors.len() });
    }
    let r_hat = state.attitude.matrix();
    let innovation = r_hat * event.velocity - state.velocity;
    let next = EstimatorState {
        attitude: state.attitude,
        velocity: state.velocity + innovation * gains.k_v,
        gravity: state.gravity + innovation * gains.k_g,
        vectors: state.vectors.iter().zip(&event.vectors).map(|(r, b)| r + (r_hat * b - r) * gains.k_r).collect(),
    };
    Ok((next, Timer { tau: next_gap }))
}
