//! Small-matrix algebra on SO(3).
//!
//! Rotations are kept as full 3×3 matrices. The observers work with products
//! like `Q * R̃` and the anti-symmetric projection of such products, which are
//! matrix-native; there is no quaternion layer in between.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Absolute tolerance on `‖M + Mᵀ‖_F` accepted by [`vex`].
pub const ANTISYMMETRY_TOL: f64 = 1e-9;
/// Tolerance on `‖RᵀR − I‖_F` and `|det R − 1|` for a matrix to count as a rotation.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;
/// Tolerance on the norm of an angle-axis axis.
pub const UNIT_AXIS_TOL: f64 = 1e-12;
/// Below this rotation angle the exponential switches to its Taylor expansion.
pub const SMALL_ANGLE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So3Error {
    #[error("matrix is not anti-symmetric (‖M + Mᵀ‖_F = {residual:e})")]
    NotAntiSymmetric { residual: f64 },
    #[error("rotation axis is not unit length (‖u‖ = {norm})")]
    AxisNotUnit { norm: f64 },
    #[error("matrix is not a rotation (‖RᵀR − I‖_F = {orthonormality:e}, det = {det})")]
    NotRotation { orthonormality: f64, det: f64 },
    #[error("non-finite entries")]
    NonFinite,
}

/// `x^×`, the matrix with `x^× y = x × y`.
pub fn skew(x: &Vec3) -> Mat3 {
    Mat3::new(0.0, -x.z, x.y, x.z, 0.0, -x.x, -x.y, x.x, 0.0)
}

/// Inverse of [`skew`].
pub fn vex(m: &Mat3) -> Result<Vec3, So3Error> {
    let residual = (m + m.transpose()).norm();
    if !residual.is_finite() {
        return Err(So3Error::NonFinite);
    }
    if residual > ANTISYMMETRY_TOL {
        return Err(So3Error::NotAntiSymmetric { residual });
    }
    Ok(Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// Anti-symmetric projection `(M − Mᵀ)/2`.
pub fn antisymmetric_part(m: &Mat3) -> Mat3 {
    (m - m.transpose()) * 0.5
}

/// `vex` of the anti-symmetric part of `m`, evaluated entry-wise so it never fails.
pub fn psi(m: &Mat3) -> Vec3 {
    0.5 * Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)])
}

/// A proper rotation matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Validates orthonormality and orientation.
    pub fn from_matrix(m: Mat3) -> Result<Self, So3Error> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(So3Error::NonFinite);
        }
        let orthonormality = (m.transpose() * m - Mat3::identity()).norm();
        let det = m.determinant();
        if orthonormality > ORTHONORMALITY_TOL || (det - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(So3Error::NotRotation { orthonormality, det });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix the caller already knows to be a rotation.
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    /// Nearest rotation in Frobenius norm (polar decomposition via SVD).
    pub fn nearest(m: &Mat3) -> Result<Self, So3Error> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(So3Error::NonFinite);
        }
        let svd = m.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let d = (u * v_t).determinant().signum();
        let fix = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d));
        Ok(Self(u * fix * v_t))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat3 {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `‖RᵀR − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).norm()
    }

    /// Normalized distance to the identity, `sqrt(tr(I − R)/4)`, in `[0, 1]`.
    ///
    /// Evaluated as `sin(θ/2)`, which equals `√(tr(I − R)/4)` on SO(3).
    pub fn distance_to_identity(&self) -> f64 {
        (0.5 * self.angle()).sin()
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        psi(&self.0).norm().atan2((self.0.trace() - 1.0) / 2.0)
    }
}

impl fmt::Debug for RotationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("RotationMatrix").field(&self.0).finish()
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<&RotationMatrix> for &RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: &RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for RotationMatrix {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &RotationMatrix {
    type Output = Vec3;
    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// Rotation by `theta` radians about the unit axis `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleAxis {
    pub theta: f64,
    pub axis: Vec3,
}

impl AngleAxis {
    pub fn new(theta: f64, axis: Vec3) -> Result<Self, So3Error> {
        let norm = axis.norm();
        if !norm.is_finite() || !theta.is_finite() {
            return Err(So3Error::NonFinite);
        }
        if (norm - 1.0).abs() > UNIT_AXIS_TOL {
            return Err(So3Error::AxisNotUnit { norm });
        }
        Ok(Self { theta, axis })
    }

    /// Normalizes `axis` first; fails only for a zero or non-finite axis.
    pub fn from_unnormalized(theta: f64, axis: Vec3) -> Result<Self, So3Error> {
        let norm = axis.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(So3Error::AxisNotUnit { norm });
        }
        Self::new(theta, axis / norm)
    }

    /// Rodrigues formula `I + sin θ u^× + (1 − cos θ)(u^×)²`.
    pub fn to_rotation(&self) -> RotationMatrix {
        let k = skew(&self.axis);
        let (s, c) = self.theta.sin_cos();
        RotationMatrix(Mat3::identity() + k * s + k * k * (1.0 - c))
    }
}

/// Checks the unit-axis precondition and evaluates the Rodrigues formula.
pub fn angle_axis_to_rotation(aa: &AngleAxis) -> Result<RotationMatrix, So3Error> {
    let norm = aa.axis.norm();
    if (norm - 1.0).abs() > UNIT_AXIS_TOL {
        return Err(So3Error::AxisNotUnit { norm });
    }
    Ok(aa.to_rotation())
}

/// Matrix exponential of `w^×`.
pub fn exp(w: &Vec3) -> RotationMatrix {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = skew(w);
    RotationMatrix(Mat3::identity() + k * a + k * k * b)
}

/// Rotation vector of `r` (inverse of [`exp`] for angles below π).
pub fn log(r: &RotationMatrix) -> Vec3 {
    let m = r.matrix();
    let theta = r.angle();
    if theta < SMALL_ANGLE {
        return psi(m);
    }
    if std::f64::consts::PI - theta < 1e-6 {
        // Near π the anti-symmetric part vanishes; read the axis off the symmetric part.
        let b = (m + Mat3::identity()) * 0.5;
        let col = (0..3).max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)])).unwrap();
        let mut axis = b.column(col).into_owned();
        axis /= axis.norm();
        let sign = if axis.dot(&psi(m)) < 0.0 { -1.0 } else { 1.0 };
        return axis * theta * sign;
    }
    psi(m) * (theta / theta.sin())
}

/// Both sides of `ψ(QX) = ½ Σ ρᵢ (Xᵀrᵢ) × rᵢ` with `Q = Σ ρᵢ rᵢ rᵢᵀ`.
///
/// Returned as `(lhs, rhs)`. Used as an oracle in tests.
pub fn weighted_vector_identity(rhos: &[f64], rs: &[Vec3], x: &RotationMatrix) -> (Vec3, Vec3) {
    assert_eq!(rhos.len(), rs.len(), "weights and vectors must have the same length");
    let q = rhos.iter().zip(rs).fold(Mat3::zeros(), |acc, (rho, r)| acc + r * r.transpose() * *rho);
    let lhs = psi(&(q * x.matrix()));
    let rhs = rhos
        .iter()
        .zip(rs)
        .fold(Vec3::zeros(), |acc, (rho, r)| acc + (x.matrix().transpose() * r).cross(r) * (0.5 * rho));
    (lhs, rhs)
}
