//! Error metrics, Lyapunov functions and convergence statistics computed from
//! observer traces.

mod iss;
mod metrics;

pub use iss::{iss_study, simulate_attitude_error, IssConfig, IssRun, IssStudyResult, INPUT_INTERVAL};
pub use metrics::{
    convergence_report, log_linear_fit, metric_series, ConvergenceReport, LinearFit, MetricRow, MetricSeries,
};

use nalgebra::{DVector, Matrix6, Vector6};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use thiserror::Error;

use crate::gains::{EquilibriaReport, LinearBlocks, LyapunovCertificate, QMatrices};
use crate::so3::{AngleAxis, Mat3, RotationMatrix, Vec3};
use crate::world::WorldError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("certificate was issued for other gains or dimensions")]
    CertificateMismatch,
    #[error("tail fraction must lie in (0, 1), got {0}")]
    InvalidTail(f64),
    #[error("amplitudes must be non-negative, finite and ascending")]
    InvalidAmplitudes,
    #[error(transparent)]
    World(#[from] WorldError),
}

/// `V(R̃) = tr(Q(I − R̃))`.
pub fn lyapunov_vr(r_tilde: &RotationMatrix, q: &QMatrices) -> f64 {
    (q.q * (Mat3::identity() - r_tilde.matrix())).trace()
}

/// `V(ζ) = ζᵀ P ζ`.
pub fn lyapunov_vzeta(zeta: &Vector6<f64>, p: &Matrix6<f64>) -> f64 {
    zeta.dot(&(p * zeta))
}

fn certificate_matches(cert: &LyapunovCertificate, blocks: &LinearBlocks) -> bool {
    let d = blocks.dim();
    let k_r = if blocks.n_vectors > 0 { 1.0 - blocks.a_g[(6, 6)] } else { cert.k_r };
    cert.n_vectors == blocks.n_vectors
        && cert.p.nrows() == d
        && cert.k_v == blocks.k[(0, 0)]
        && cert.k_g == blocks.k[(3, 0)]
        && (k_r - cert.k_r).abs() <= 1e-15
}

/// `V(ζ′) = ζ̄ᵀ e^{Āᵀτ} P e^{Āτ} ζ̄`.
pub fn lyapunov_vzeta_prime(
    zeta_bar: &DVector<f64>,
    tau: f64,
    cert: &LyapunovCertificate,
    blocks: &LinearBlocks,
) -> Result<f64, AnalysisError> {
    if !certificate_matches(cert, blocks) || zeta_bar.len() != blocks.dim() {
        return Err(AnalysisError::CertificateMismatch);
    }
    // e^{Āτ} = I + Āτ acts only on the velocity rows: ṽ ← ṽ + τ g̃.
    let mut shifted = zeta_bar.clone();
    for i in 0..3 {
        shifted[i] += tau * zeta_bar[3 + i];
    }
    Ok(shifted.dot(&(&cert.p * &shifted)))
}

/// Constants `(α, ᾱ)` with `α‖ζ̄‖² ≤ V(ζ′) ≤ ᾱ‖ζ̄‖²` for `τ ∈ [0, T_M]`.
pub fn sandwich_bounds(cert: &LyapunovCertificate) -> (f64, f64) {
    let t = cert.tau_range.1;
    // Squared singular values of [[1, τ], [0, 1]], extreme at τ = T_M.
    let root = t * (t * t + 4.0).sqrt();
    let (s_min, s_max) = ((2.0 + t * t - root) / 2.0, (2.0 + t * t + root) / 2.0);
    let eig = cert.p.symmetric_eigenvalues();
    (s_min * eig.min(), s_max * eig.max())
}

/// Rotation drawn uniformly (Haar measure) on SO(3).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    // Angle density ∝ 1 − cos θ on [0, π], sampled by rejection.
    let theta = loop {
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        if rng.random::<f64>() * 2.0 <= 1.0 - theta.cos() {
            break theta;
        }
    };
    let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
    AngleAxis { theta, axis: Vec3::new(x, y, z) }.to_rotation()
}

/// Uniform rotation at least `min_distance` (in `|·|_I`) away from every undesired equilibrium.
pub fn random_rotation_away_from<R: Rng + ?Sized>(
    rng: &mut R,
    equilibria: &EquilibriaReport,
    min_distance: f64,
) -> RotationMatrix {
    loop {
        let r = random_rotation(rng);
        if equilibria.distance_to_undesired(&r) >= min_distance {
            return r;
        }
    }
}
