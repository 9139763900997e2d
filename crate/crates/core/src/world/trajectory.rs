use std::f64::consts::PI;

use crate::so3::{RotationMatrix, Vec3};

/// Closed-form rigid-body motion: body angular rate, inertial velocity and its derivative.
///
/// `acceleration` must be the analytic time derivative of `velocity`.
pub trait Trajectory: Send + Sync {
    /// Angular velocity in the body frame (rad/s).
    fn angular_rate(&self, t: f64) -> Vec3;
    /// Linear velocity in the inertial frame (m/s).
    fn velocity(&self, t: f64) -> Vec3;
    /// Time derivative of [`Trajectory::velocity`] (m/s²).
    fn acceleration(&self, t: f64) -> Vec3;
    fn initial_attitude(&self) -> RotationMatrix;
}

/// Vehicle flying a planar figure-eight while tumbling slowly.
///
/// `v(t) = [−sin t, −4 sin t cos t, 0]`, `ω(t) = [sin(0.1πt), 0.1, cos(0.1πt)]`.
#[derive(Debug, Clone, Copy)]
pub struct FigureEight {
    pub initial: RotationMatrix,
}

impl Default for FigureEight {
    fn default() -> Self {
        Self { initial: RotationMatrix::identity() }
    }
}

impl Trajectory for FigureEight {
    fn angular_rate(&self, t: f64) -> Vec3 {
        let phase = 0.1 * PI * t;
        Vec3::new(phase.sin(), 0.1, phase.cos())
    }

    fn velocity(&self, t: f64) -> Vec3 {
        let (s, c) = t.sin_cos();
        Vec3::new(-s, -4.0 * s * c, 0.0)
    }

    fn acceleration(&self, t: f64) -> Vec3 {
        // d/dt(−4 sin t cos t) = −4 cos 2t
        Vec3::new(-t.cos(), -4.0 * (2.0 * t).cos(), 0.0)
    }

    fn initial_attitude(&self) -> RotationMatrix {
        self.initial
    }
}

/// Constant body rate with a quadratic velocity profile `v0 + v1 t + v2 t²`.
///
/// Every signal here is reproduced exactly by the observers' step model
/// (piecewise-constant rate, specific force linear in a frozen frame), which
/// makes it the reference world for checks that must hold to round-off.
#[derive(Debug, Clone, Copy)]
pub struct ConstantRate {
    pub rate: Vec3,
    pub v0: Vec3,
    pub v1: Vec3,
    pub v2: Vec3,
    pub initial: RotationMatrix,
}

impl ConstantRate {
    pub fn hover() -> Self {
        Self {
            rate: Vec3::zeros(),
            v0: Vec3::zeros(),
            v1: Vec3::zeros(),
            v2: Vec3::zeros(),
            initial: RotationMatrix::identity(),
        }
    }
}

impl Trajectory for ConstantRate {
    fn angular_rate(&self, _t: f64) -> Vec3 {
        self.rate
    }

    fn velocity(&self, t: f64) -> Vec3 {
        self.v0 + self.v1 * t + self.v2 * (t * t)
    }

    fn acceleration(&self, t: f64) -> Vec3 {
        self.v1 + self.v2 * (2.0 * t)
    }

    fn initial_attitude(&self) -> RotationMatrix {
        self.initial
    }
}
