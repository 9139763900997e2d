//! Velocity-aided attitude observers.
//!
//! Three estimators share one state layout ([`EstimatorState`]):
//!
//! * the continuous observer, driven by continuous (or zero-order-held) body
//!   velocity and vector measurements,
//! * its reduced form, in which the gravity estimate is the algebraic
//!   expression `k_v (R̂ v_m − v̂)` instead of a state,
//! * the hybrid observer, which propagates internal copies `r̂_i` of the
//!   inertial vectors and corrects `v̂`, `ĝ`, `r̂_i` only when a measurement
//!   arrives. Its attitude estimate never jumps.
//!
//! [`run_continuous`] and [`run_hybrid`] drive the observers over recorded
//! sensor streams and return a [`HybridTrace`] indexed by hybrid time `(t, j)`.

mod engine;
mod innovation;
mod step;

pub use engine::{run_continuous, run_hybrid, ContinuousVariant, HybridTrace, MeasurementFeed, TraceKind, TraceSample};
pub use innovation::{gamma, gamma_bar, innovation_continuous, innovation_hybrid};
pub use step::{flow_continuous, flow_hybrid, flow_reduced, jump_hybrid, Aiding, ImuSegment};

use nalgebra::{DVector, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::so3::{RotationMatrix, Vec3};
use crate::world::WorldConstants;

/// Tolerance on `τ` when deciding that the timer has expired.
pub const TIMER_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObserverError {
    #[error("jump requested while the timer still reads τ = {tau}")]
    TimerNotExpired { tau: f64 },
    #[error("next gap {gap} outside [{t_min}, {t_max}]")]
    GapOutOfBounds { gap: f64, t_min: f64, t_max: f64 },
    #[error("expected {expected} inertial vectors, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("sensor streams are inconsistent: {0}")]
    InvalidStream(String),
}

/// Observer gains.
///
/// `rho` holds the innovation weights `ρ_1..ρ_N` for the inertial vectors
/// followed by the gravity weight `ρ_{N+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub k_o: f64,
    pub k_v: f64,
    pub k_g: f64,
    #[serde(default)]
    pub k_r: f64,
    pub rho: Vec<f64>,
}

impl GainSet {
    /// Number of inertial vectors these weights are sized for.
    pub fn n_vectors(&self) -> usize {
        self.rho.len().saturating_sub(1)
    }

    pub fn vector_weights(&self) -> &[f64] {
        &self.rho[..self.n_vectors()]
    }

    pub fn gravity_weight(&self) -> f64 {
        self.rho.last().copied().unwrap_or(0.0)
    }

    /// Checks positivity of the gains the given observer uses and the weight layout.
    pub fn validate(&self, n_vectors: usize, uses_k_g: bool, uses_k_r: bool) -> Result<(), ObserverError> {
        if self.rho.len() != n_vectors + 1 {
            return Err(ObserverError::DimensionMismatch { expected: n_vectors + 1, got: self.rho.len() });
        }
        let mut required = vec![("k_o", self.k_o), ("k_v", self.k_v)];
        if uses_k_g {
            required.push(("k_g", self.k_g));
        }
        if uses_k_r {
            required.push(("k_r", self.k_r));
        }
        for (name, value) in required {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ObserverError::InvalidGains(format!("{name} must be positive, got {value}")));
            }
        }
        if self.rho.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(ObserverError::InvalidGains("weights must be non-negative".into()));
        }
        if !self.rho.iter().any(|r| *r > 0.0) {
            return Err(ObserverError::InvalidGains("at least one weight must be positive".into()));
        }
        Ok(())
    }
}

/// Estimates `(R̂, v̂, ĝ, r̂_1..r̂_N)`; `v̂`, `ĝ`, `r̂_i` live in the inertial frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub attitude: RotationMatrix,
    pub velocity: Vec3,
    pub gravity: Vec3,
    pub vectors: Vec<Vec3>,
}

impl EstimatorState {
    /// Given attitude, everything else zero.
    pub fn new(attitude: RotationMatrix, n_vectors: usize) -> Self {
        Self { attitude, velocity: Vec3::zeros(), gravity: Vec3::zeros(), vectors: vec![Vec3::zeros(); n_vectors] }
    }

    /// The estimate that coincides with the truth.
    pub fn exact(attitude: RotationMatrix, velocity: Vec3, consts: &WorldConstants) -> Self {
        Self { attitude, velocity, gravity: consts.gravity, vectors: consts.inertial_vectors.clone() }
    }
}

/// Virtual timer counting down to the next measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timer {
    pub tau: f64,
}

/// Hybrid time: ordinary time plus the number of jumps so far.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HybridTime {
    pub t: f64,
    pub j: u64,
}

/// Estimation errors `R̃ = R R̂ᵀ`, `ṽ = v − R̃ v̂`, `g̃ = g − R̃ ĝ`, `r̃_i = r_i − R̃ r̂_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorState {
    pub attitude: RotationMatrix,
    pub velocity: Vec3,
    pub gravity: Vec3,
    pub vectors: Vec<Vec3>,
}

impl ErrorState {
    /// `ζ = (ṽ, g̃)`.
    pub fn zeta(&self) -> Vector6<f64> {
        Vector6::new(self.velocity.x, self.velocity.y, self.velocity.z, self.gravity.x, self.gravity.y, self.gravity.z)
    }

    /// `ζ̄ = (ṽ, g̃, r̃_1, …, r̃_N)`.
    pub fn zeta_bar(&self) -> DVector<f64> {
        let mut out = DVector::zeros(6 + 3 * self.vectors.len());
        out.rows_mut(0, 3).copy_from(&self.velocity);
        out.rows_mut(3, 3).copy_from(&self.gravity);
        for (i, r) in self.vectors.iter().enumerate() {
            out.rows_mut(6 + 3 * i, 3).copy_from(r);
        }
        out
    }
}

pub fn error_state(
    attitude: &RotationMatrix,
    velocity: &Vec3,
    state: &EstimatorState,
    consts: &WorldConstants,
) -> ErrorState {
    let r_tilde = attitude * &state.attitude.transpose();
    let m = r_tilde.matrix();
    ErrorState {
        attitude: r_tilde,
        velocity: velocity - m * state.velocity,
        gravity: consts.gravity - m * state.gravity,
        vectors: consts.inertial_vectors.iter().zip(&state.vectors).map(|(r, r_hat)| r - m * r_hat).collect(),
    }
}
