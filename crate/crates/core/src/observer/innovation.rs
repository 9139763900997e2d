use nalgebra::{DMatrix, SMatrix};

use super::{EstimatorState, GainSet};
use crate::so3::{skew, RotationMatrix, Vec3};
use crate::world::WorldConstants;

/// `σ_R = −Σ ρ_i r_i^× R̂ b_i − ρ_{N+1} g^× ĝ`, from raw body-frame vector measurements.
///
/// An empty `b` drops the vector terms (no measurement received yet).
pub fn innovation_continuous(state: &EstimatorState, b: &[Vec3], consts: &WorldConstants, gains: &GainSet) -> Vec3 {
    let r_hat = state.attitude.matrix();
    let from_vectors = consts
        .inertial_vectors
        .iter()
        .zip(b)
        .zip(gains.vector_weights())
        .fold(Vec3::zeros(), |acc, ((r, b_i), rho)| acc - r.cross(&(r_hat * b_i)) * *rho);
    from_vectors - consts.gravity.cross(&state.gravity) * gains.gravity_weight()
}

/// `σ_R = −Σ ρ_i r_i^× r̂_i − ρ_{N+1} g^× ĝ`, from the observer's internal estimates only.
pub fn innovation_hybrid(state: &EstimatorState, consts: &WorldConstants, gains: &GainSet) -> Vec3 {
    let from_vectors = consts
        .inertial_vectors
        .iter()
        .zip(&state.vectors)
        .zip(gains.vector_weights())
        .fold(Vec3::zeros(), |acc, ((r, r_hat), rho)| acc - r.cross(r_hat) * *rho);
    from_vectors - consts.gravity.cross(&state.gravity) * gains.gravity_weight()
}

/// `Γ(R̃) = [0₃, ρ_{N+1} g^× R̃ᵀ]`, mapping `ζ` into the innovation.
pub fn gamma(r_tilde: &RotationMatrix, consts: &WorldConstants, gains: &GainSet) -> SMatrix<f64, 3, 6> {
    let mut out = SMatrix::<f64, 3, 6>::zeros();
    let block = skew(&consts.gravity) * r_tilde.matrix().transpose() * gains.gravity_weight();
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&block);
    out
}

/// `Γ̄(R̃) = [Γ(R̃), ρ_1 r_1^× R̃ᵀ, …, ρ_N r_N^× R̃ᵀ]`.
pub fn gamma_bar(r_tilde: &RotationMatrix, consts: &WorldConstants, gains: &GainSet) -> DMatrix<f64> {
    let n = consts.n_vectors();
    let mut out = DMatrix::zeros(3, 6 + 3 * n);
    out.view_mut((0, 0), (3, 6)).copy_from(&gamma(r_tilde, consts, gains));
    for (i, (r, rho)) in consts.inertial_vectors.iter().zip(gains.vector_weights()).enumerate() {
        let block = skew(r) * r_tilde.matrix().transpose() * *rho;
        out.view_mut((0, 6 + 3 * i), (3, 3)).copy_from(&block);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::error_state;
    use crate::so3::{exp, psi, Mat3};

    fn gains() -> GainSet {
        GainSet { k_o: 15.0, k_v: 0.7, k_g: 4.0, k_r: 0.1, rho: vec![1.3, 0.4, 0.02] }
    }

    fn consts() -> WorldConstants {
        WorldConstants::new(Vec3::new(0.0, 0.0, -9.81), vec![Vec3::new(0.36, 0.64, 0.0), Vec3::new(-0.2, 0.1, 0.9)])
            .unwrap()
    }

    fn q_matrix(consts: &WorldConstants, gains: &GainSet) -> Mat3 {
        let mut q = consts.gravity * consts.gravity.transpose() * gains.gravity_weight();
        for (r, rho) in consts.inertial_vectors.iter().zip(gains.vector_weights()) {
            q += r * r.transpose() * *rho;
        }
        q
    }

    #[test]
    fn vector_terms_match_weighted_identity() {
        let c = consts();
        let g = gains();
        let rt = exp(&Vec3::new(0.9, -0.4, 2.0));
        let direct = c
            .inertial_vectors
            .iter()
            .zip(g.vector_weights())
            .fold(Vec3::zeros(), |acc, (r, rho)| acc - r.cross(&(rt.matrix().transpose() * r)) * *rho)
            - c.gravity.cross(&(rt.matrix().transpose() * c.gravity)) * g.gravity_weight();
        let half = psi(&(q_matrix(&c, &g) * rt.matrix()));
        assert!((direct - 2.0 * half).norm() < 1e-12);
    }

    #[test]
    fn equilibrium_innovation_vanishes() {
        let c = consts();
        let r = exp(&Vec3::new(0.5, -0.2, 1.0));
        let state = EstimatorState::exact(r, Vec3::zeros(), &c);
        let b: Vec<Vec3> = c.inertial_vectors.iter().map(|v| r.matrix().transpose() * v).collect();
        assert!(innovation_continuous(&state, &b, &c, &gains()).norm() < 1e-14);
        assert!(innovation_hybrid(&state, &c, &gains()).norm() < 1e-14);
    }

    #[test]
    fn without_gravity_weight_reduces_to_complementary_filter() {
        let c = consts();
        let g = GainSet { rho: vec![1.3, 0.4, 0.0], ..gains() };
        let r = exp(&Vec3::new(0.5, -0.2, 1.0));
        let mut state = EstimatorState::new(exp(&Vec3::new(-1.0, 0.3, 0.1)), 2);
        state.gravity = Vec3::new(3.0, 2.0, 1.0);
        let b: Vec<Vec3> = c.inertial_vectors.iter().map(|v| r.matrix().transpose() * v).collect();
        let sigma = innovation_continuous(&state, &b, &c, &g);
        let filter_term = c
            .inertial_vectors
            .iter()
            .zip(&b)
            .zip(g.vector_weights())
            .fold(Vec3::zeros(), |acc, ((r, b), rho)| acc + (state.attitude.matrix() * b).cross(r) * *rho);
        assert!((sigma - filter_term).norm() < 1e-14);
    }

    #[test]
    fn continuous_innovation_in_error_coordinates() {
        let c = consts();
        let g = gains();
        let r = exp(&Vec3::new(0.5, -0.2, 1.0));
        let v = Vec3::new(0.3, 0.1, -2.0);
        let mut state = EstimatorState::new(exp(&Vec3::new(-1.0, 0.3, 2.1)), 2);
        state.velocity = Vec3::new(-1.0, 0.5, 0.2);
        state.gravity = Vec3::new(0.4, -1.0, -7.0);
        let b: Vec<Vec3> = c.inertial_vectors.iter().map(|x| r.matrix().transpose() * x).collect();
        let sigma = innovation_continuous(&state, &b, &c, &g);
        let e = error_state(&r, &v, &state, &c);
        // The vector terms sum to twice ψ(QR̃) under the weighted cross-product identity.
        let rebuilt = 2.0 * psi(&(q_matrix(&c, &g) * e.attitude.matrix())) + gamma(&e.attitude, &c, &g) * e.zeta();
        assert!((sigma - rebuilt).norm() < 1e-12);
    }

    #[test]
    fn hybrid_innovation_in_error_coordinates() {
        let c = consts();
        let g = gains();
        let r = exp(&Vec3::new(-0.5, 0.8, 0.1));
        let mut state = EstimatorState::new(exp(&Vec3::new(1.0, 0.3, -2.1)), 2);
        state.gravity = Vec3::new(0.4, -1.0, -7.0);
        state.vectors = vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(-0.5, 0.0, 0.7)];
        let sigma = innovation_hybrid(&state, &c, &g);
        let e = error_state(&r, &Vec3::zeros(), &state, &c);
        let rebuilt =
            2.0 * psi(&(q_matrix(&c, &g) * e.attitude.matrix())) + gamma_bar(&e.attitude, &c, &g) * e.zeta_bar();
        assert!((sigma - rebuilt.fixed_rows::<3>(0)).norm() < 1e-12);
    }

    #[test]
    fn gamma_bar_frobenius_norm() {
        let c = consts();
        let g = gains();
        let expected = 2f64.sqrt() * g.gravity_weight() * c.gravity.norm()
            + c.inertial_vectors
                .iter()
                .zip(g.vector_weights())
                .map(|(r, rho)| 2f64.sqrt() * rho * r.norm())
                .sum::<f64>();
        for k in 0..10 {
            let rt = exp(&Vec3::new(0.3 * k as f64, -0.7, 0.1 * k as f64));
            let gb = gamma_bar(&rt, &c, &g);
            // The closed form is the sum of blockwise norms; the norm of the whole
            // matrix is the root of their squares.
            let blocks: Vec<f64> = (0..(2 + c.n_vectors())).map(|i| gb.view((0, 3 * i), (3, 3)).norm()).collect();
            assert!((blocks.iter().sum::<f64>() - expected).abs() < 1e-12);
            let root_sum_sq = blocks.iter().map(|b| b * b).sum::<f64>().sqrt();
            assert!((gb.norm() - root_sum_sq).abs() < 1e-12);
            assert!(gb.norm() <= expected + 1e-12);
            let g_norm = gamma(&rt, &c, &g).norm();
            assert!((g_norm - 2f64.sqrt() * g.gravity_weight() * c.gravity.norm()).abs() < 1e-12);
        }
    }
}
