//! Gain feasibility: observability of the weighted vector set, the linear
//! error blocks, jump-to-jump spectra and the interval Lyapunov certificate.

mod lmi;

pub use lmi::{certify_lmi, certify_lmi_with_margin, lmi_residual, LyapunovCertificate, DEFAULT_MARGIN, VERIFY_GRID};

use nalgebra::{Complex, DMatrix, Matrix2, Matrix6, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::observer::GainSet;
use crate::so3::{psi, AngleAxis, Mat3, RotationMatrix, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GainsError {
    #[error("invalid interval: need 0 < t_min ≤ t_max, got [{t_min}, {t_max}]")]
    InvalidBounds { t_min: f64, t_max: f64 },
    #[error("k_v = {k_v} outside (0, 1)")]
    KvOutOfRange { k_v: f64 },
    #[error("no Lyapunov certificate found (best endpoint eigenvalue {best})")]
    Infeasible { best: f64 },
    #[error("{weights} weights for {vectors} vectors (expected one extra weight for gravity)")]
    DimensionMismatch { weights: usize, vectors: usize },
}

fn check_interval(t_min: f64, t_max: f64) -> Result<(), GainsError> {
    if !(t_min > 0.0 && t_min <= t_max && t_max.is_finite()) {
        return Err(GainsError::InvalidBounds { t_min, t_max });
    }
    Ok(())
}

/// `Q = Σ ρ_i r_i r_iᵀ + ρ_{N+1} g gᵀ` and `Q̄ = tr(Q)I − Q`, with the data they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrices {
    pub q: Mat3,
    pub q_bar: Mat3,
    /// Eigenvalues of `Q̄`, ascending.
    pub eigenvalues: [f64; 3],
    /// Unit eigenvectors of `Q̄` as columns, in the order of `eigenvalues`.
    pub eigenvectors: Mat3,
    pub rhos: Vec<f64>,
    pub vectors: Vec<Vec3>,
    pub gravity: Vec3,
}

/// `rhos` holds one weight per vector followed by the gravity weight.
pub fn build_q(rhos: &[f64], rs: &[Vec3], g: &Vec3) -> Result<QMatrices, GainsError> {
    if rhos.len() != rs.len() + 1 {
        return Err(GainsError::DimensionMismatch { weights: rhos.len(), vectors: rs.len() });
    }
    let q = rs
        .iter()
        .chain(std::iter::once(g))
        .zip(rhos)
        .fold(Mat3::zeros(), |acc, (r, rho)| acc + r * r.transpose() * *rho);
    let q_bar = Mat3::identity() * q.trace() - q;
    let eig = SymmetricEigen::new(q_bar);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.map(|i| eig.eigenvalues[i]);
    let eigenvectors = Mat3::from_columns(&order.map(|i| eig.eigenvectors.column(i).into_owned()));
    Ok(QMatrices { q, q_bar, eigenvalues, eigenvectors, rhos: rhos.to_vec(), vectors: rs.to_vec(), gravity: *g })
}

impl QMatrices {
    pub fn from_gains(gains: &GainSet, consts: &crate::world::WorldConstants) -> Result<Self, GainsError> {
        build_q(&gains.rho, &consts.inertial_vectors, &consts.gravity)
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma3Status {
    /// `Q̄ ≻ 0` because two weighted inertial vectors are non-collinear.
    SatisfiedCase1,
    /// `Q̄ ≻ 0` because a weighted inertial vector is non-collinear with weighted gravity.
    SatisfiedCase2,
    NotSatisfied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma3Report {
    pub status: Lemma3Status,
    pub min_eigenvalue: f64,
    /// All three eigenvalues of `Q̄` separated by more than the tolerance.
    pub distinct_eigenvalues: bool,
}

fn non_collinear(a: &Vec3, b: &Vec3, tol: f64) -> bool {
    a.cross(b).norm() > tol * a.norm() * b.norm()
}

/// Positive definiteness of `Q̄` and which hypothesis accounts for it.
pub fn check_lemma3(q: &QMatrices, tol: f64) -> Lemma3Report {
    let scale = q.lambda_max().abs().max(1.0);
    let min_eigenvalue = q.lambda_min();
    let e = q.eigenvalues;
    let distinct_eigenvalues = (e[1] - e[0]) > tol * scale && (e[2] - e[1]) > tol * scale;
    let weighted: Vec<&Vec3> = q.vectors.iter().zip(&q.rhos).filter(|(_, w)| **w > 0.0).map(|(r, _)| r).collect();
    let gravity_used = q.rhos.last().is_some_and(|w| *w > 0.0);
    let status = if min_eigenvalue <= tol * scale {
        Lemma3Status::NotSatisfied
    } else if weighted.iter().enumerate().any(|(i, a)| weighted[i + 1..].iter().any(|b| non_collinear(a, b, tol))) {
        Lemma3Status::SatisfiedCase1
    } else if gravity_used && weighted.iter().any(|r| non_collinear(r, &q.gravity, tol)) {
        Lemma3Status::SatisfiedCase2
    } else {
        Lemma3Status::NotSatisfied
    };
    Lemma3Report { status, min_eigenvalue, distinct_eigenvalues }
}

/// Error-dynamics matrices of the continuous (`A, C, K`) and hybrid (`Ā, C̄, K̄`) designs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBlocks {
    pub n_vectors: usize,
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub a_bar: DMatrix<f64>,
    pub c_bar: DMatrix<f64>,
    pub k_bar: DMatrix<f64>,
    /// `I − K̄C̄`.
    pub a_g: DMatrix<f64>,
}

impl LinearBlocks {
    pub fn dim(&self) -> usize {
        3 * self.n_vectors + 6
    }
}

pub fn build_blocks(n_vectors: usize, gains: &GainSet) -> LinearBlocks {
    let i3 = DMatrix::<f64>::identity(3, 3);
    let mut a = DMatrix::zeros(6, 6);
    a.view_mut((0, 3), (3, 3)).copy_from(&i3);
    let mut c = DMatrix::zeros(3, 6);
    c.view_mut((0, 0), (3, 3)).copy_from(&i3);
    let mut k = DMatrix::zeros(6, 3);
    k.view_mut((0, 0), (3, 3)).copy_from(&(&i3 * gains.k_v));
    k.view_mut((3, 0), (3, 3)).copy_from(&(&i3 * gains.k_g));

    let d = 3 * n_vectors + 6;
    let r = 3 * n_vectors;
    let mut a_bar = DMatrix::zeros(d, d);
    a_bar.view_mut((0, 0), (6, 6)).copy_from(&a);
    let mut c_bar = DMatrix::zeros(3 + r, d);
    c_bar.view_mut((0, 0), (3, 6)).copy_from(&c);
    c_bar.view_mut((3, 6), (r, r)).fill_with_identity();
    let mut k_bar = DMatrix::zeros(d, 3 + r);
    k_bar.view_mut((0, 0), (6, 3)).copy_from(&k);
    k_bar.view_mut((6, 3), (r, r)).copy_from(&(DMatrix::<f64>::identity(r, r) * gains.k_r));
    let a_g = DMatrix::identity(d, d) - &k_bar * &c_bar;
    debug_assert!((&a_bar * &a_bar).iter().all(|x| *x == 0.0));
    LinearBlocks { n_vectors, a, c, k, a_bar, c_bar, k_bar, a_g }
}

/// `e^{Āτ} = I + Āτ`.
pub fn expm_abar(blocks: &LinearBlocks, tau: f64) -> DMatrix<f64> {
    DMatrix::identity(blocks.dim(), blocks.dim()) + &blocks.a_bar * tau
}

/// Jump-to-jump map `e^{Āτ} A_g`.
pub fn monodromy(blocks: &LinearBlocks, tau: f64) -> DMatrix<f64> {
    expm_abar(blocks, tau) * &blocks.a_g
}

/// Spectrum of the jump-to-jump map restricted to one axis of `ζ`.
pub fn zeta_eigs(k_v: f64, k_g: f64, tau: f64) -> [Complex<f64>; 2] {
    let s = k_v + k_g * tau;
    let root = Complex::new(s * s - 4.0 * k_g * tau, 0.0).sqrt();
    let half = Complex::new(0.5, 0.0);
    [
        Complex::new(1.0, 0.0) - half * (Complex::new(s, 0.0) + root),
        Complex::new(1.0, 0.0) - half * (Complex::new(s, 0.0) - root),
    ]
}

/// Closed-form eigenvalues of `e^{Āτ} A_g`: each `ζ` eigenvalue three times,
/// then `1 − k_r` repeated `3N` times.
pub fn monodromy_eigs(gains: &GainSet, n_vectors: usize, tau: f64) -> Vec<Complex<f64>> {
    let pair = zeta_eigs(gains.k_v, gains.k_g, tau);
    let mut out = Vec::with_capacity(3 * n_vectors + 6);
    for l in pair {
        out.extend(std::iter::repeat_n(l, 3));
    }
    out.extend(std::iter::repeat_n(Complex::new(1.0 - gains.k_r, 0.0), 3 * n_vectors));
    out
}

/// `(k_v + k_gτ)² − 4k_gτ`; negative values give a complex pair of modulus `√(1 − k_v)`.
pub fn discriminant(k_v: f64, k_g: f64, tau: f64) -> f64 {
    let s = k_v + k_g * tau;
    s * s - 4.0 * k_g * tau
}

/// Largest eigenvalue modulus of the jump-to-jump map over `grid` evenly spaced `τ` in `[t_min, t_max]`.
pub fn spectral_radius(gains: &GainSet, t_min: f64, t_max: f64, grid: usize) -> Result<f64, GainsError> {
    check_interval(t_min, t_max)?;
    let grid = grid.max(2);
    let zeta = (0..grid)
        .map(|i| t_min + (t_max - t_min) * i as f64 / (grid - 1) as f64)
        .flat_map(|tau| zeta_eigs(gains.k_v, gains.k_g, tau))
        .map(|l| l.norm())
        .fold(0.0, f64::max);
    Ok(zeta.max((1.0 - gains.k_r).abs()))
}

/// Every jump-to-jump eigenvalue strictly inside the unit circle on the `τ` grid.
pub fn spectral_radius_feasible(gains: &GainSet, t_min: f64, t_max: f64, grid: usize) -> Result<bool, GainsError> {
    Ok(spectral_radius(gains, t_min, t_max, grid)? < 1.0)
}

/// Largest `k_g` admitted by the closed-form sufficient condition: `(1 − √(1 − k_v)) / t_max`.
pub fn prop3_bound(k_v: f64, t_max: f64) -> Result<f64, GainsError> {
    if !(k_v > 0.0 && k_v < 1.0) {
        return Err(GainsError::KvOutOfRange { k_v });
    }
    Ok((1.0 - (1.0 - k_v).sqrt()) / t_max)
}

/// `0 < k_r < 1`, `0 < k_v < 1` and `0 < k_g < (1 − √(1 − k_v)) / t_max`.
pub fn prop3_check(gains: &GainSet, t_max: f64) -> bool {
    let in_unit = |x: f64| x > 0.0 && x < 1.0;
    in_unit(gains.k_r)
        && in_unit(gains.k_v)
        && prop3_bound(gains.k_v, t_max).is_ok_and(|b| gains.k_g > 0.0 && gains.k_g < b)
}

/// Unique `P₂` with `F₂ᵀ P₂ + P₂ F₂ = −I` for the per-axis `ζ` matrix `F₂ = A₂ − K₂C₂`.
///
/// The full 6×6 solution is `P₂ ⊗ I₃`.
pub fn continuous_lyapunov_2(k_v: f64, k_g: f64) -> Matrix2<f64> {
    // F₂ = [[−k_v, 1], [−k_g, 0]]; the (2,2), (1,1) and (1,2) entries give p12, p11, p22 in turn.
    let p12 = -0.5;
    let p11 = (1.0 + k_g) / (2.0 * k_v);
    let p22 = (p11 - k_v * p12) / k_g;
    Matrix2::new(p11, p12, p12, p22)
}

/// `P` with `(A − KC)ᵀP + P(A − KC) = −I₆`.
pub fn continuous_lyapunov(gains: &GainSet) -> Matrix6<f64> {
    let p2 = continuous_lyapunov_2(gains.k_v, gains.k_g);
    kron_i3(&p2)
}

pub(crate) fn kron_i3(p2: &Matrix2<f64>) -> Matrix6<f64> {
    let mut p = Matrix6::zeros();
    for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        p.fixed_view_mut::<3, 3>(3 * r, 3 * c).copy_from(&(Mat3::identity() * p2[(r, c)]));
    }
    p
}

/// The set on which the attitude error flow with zero input stops.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriaReport {
    pub identity: RotationMatrix,
    /// `R_a(π, v)` for each unit eigenvector `v` of `Q̄`.
    pub undesired: Vec<RotationMatrix>,
    pub axes: Vec<Vec3>,
    /// False when `Q̄` has a repeated eigenvalue, in which case the undesired
    /// equilibria form continua through the listed representatives.
    pub isolated: bool,
}

pub fn enumerate_equilibria(q: &QMatrices) -> EquilibriaReport {
    let axes: Vec<Vec3> = (0..3).map(|i| q.eigenvectors.column(i).normalize()).collect();
    let undesired = axes.iter().map(|v| AngleAxis { theta: std::f64::consts::PI, axis: *v }.to_rotation()).collect();
    let isolated = check_lemma3(q, 1e-9).distinct_eigenvalues;
    EquilibriaReport { identity: RotationMatrix::identity(), undesired, axes, isolated }
}

impl EquilibriaReport {
    /// Smallest `|R R_eᵀ|_I` over the undesired equilibria.
    pub fn distance_to_undesired(&self, r: &RotationMatrix) -> f64 {
        self.undesired.iter().map(|e| (r * &e.transpose()).distance_to_identity()).fold(f64::INFINITY, f64::min)
    }

    /// Largest `‖ψ(QR)‖` over all listed equilibria.
    pub fn residual(&self, q: &QMatrices) -> f64 {
        std::iter::once(&self.identity)
            .chain(&self.undesired)
            .map(|r| psi(&(q.q * r.matrix())).norm())
            .fold(0.0, f64::max)
    }
}
